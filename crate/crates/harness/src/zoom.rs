//! Empirical zooming-dimension diagnostic from cached oracle gains.

use policy_zoom_core::math::Coords;
use policy_zoom_core::policy::{policy_distance, MetricSpec, PolicyFamily};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::oracle::GainEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoomRow {
    pub gamma: f64,
    /// Greedy cover size of the gap band `(γ, 2γ]`.
    pub band_cover: usize,
    /// Greedy cover size of `{gap ≤ γ}`.
    pub near_cover: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoomDiagnostic {
    pub c_zoom: f64,
    pub rows: Vec<ZoomRow>,
    /// Log-log slope of band cover size against `1/γ`.
    pub dimension: Option<f64>,
}

/// Number of balls of radius `radius` a greedy pass needs to cover `points`.
pub fn greedy_cover(points: &[Coords], radius: f64, family: &PolicyFamily, metric: &MetricSpec) -> Result<usize> {
    let mut covered = vec![false; points.len()];
    let mut centers = 0;
    for i in 0..points.len() {
        if covered[i] {
            continue;
        }
        centers += 1;
        let c = family.policy(points[i]);
        for j in i..points.len() {
            if !covered[j] && policy_distance(&c, &family.policy(points[j]), family, metric)? <= radius {
                covered[j] = true;
            }
        }
    }
    Ok(centers)
}

/// Least-squares slope of `ln y` against `ln x` over positive pairs.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(&a, &b)| a > 0.0 && b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

pub fn zooming_diagnostic(
    oracle: &GainEstimate,
    family: &PolicyFamily,
    metric: &MetricSpec,
    gammas: &[f64],
    c_zoom: f64,
) -> Result<ZoomDiagnostic> {
    let gaps: Vec<(Coords, f64)> = oracle
        .grid
        .iter()
        .map(|g| (Coords::new(&g.w), oracle.j_star - g.mean))
        .collect();
    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let band: Vec<Coords> = gaps.iter().filter(|(_, d)| *d > gamma && *d <= 2.0 * gamma).map(|p| p.0).collect();
        let near: Vec<Coords> = gaps.iter().filter(|(_, d)| *d <= gamma).map(|p| p.0).collect();
        let radius = gamma / c_zoom;
        rows.push(ZoomRow {
            gamma,
            band_cover: greedy_cover(&band, radius, family, metric)?,
            near_cover: greedy_cover(&near, radius, family, metric)?,
        });
    }
    let inv: Vec<f64> = rows.iter().map(|r| 1.0 / r.gamma).collect();
    let counts: Vec<f64> = rows.iter().map(|r| r.band_cover as f64).collect();
    Ok(ZoomDiagnostic {
        c_zoom,
        dimension: loglog_slope(&inv, &counts),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(loglog_slope(&[1.0], &[1.0]), None);
        assert_eq!(loglog_slope(&[1.0, 2.0], &[0.0, 0.0]), None);
    }
}
