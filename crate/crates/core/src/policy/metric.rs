use alloc::format;

use super::cover::GridAxes;
use super::{ParamPolicy, PolicyFamily};
use crate::math::Coords;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricMode {
    /// `‖w - w'‖₂ / L_W`.
    ParamEuclid,
    /// Sup over a state grid of the action distance.
    SupGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSpec {
    pub mode: MetricMode,
    /// State-grid spacing for [`MetricMode::SupGrid`].
    pub resolution: f64,
}

impl Default for MetricSpec {
    fn default() -> Self {
        Self {
            mode: MetricMode::ParamEuclid,
            resolution: 0.01,
        }
    }
}

impl MetricSpec {
    pub fn sup_grid(resolution: f64) -> Self {
        Self {
            mode: MetricMode::SupGrid,
            resolution,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution > 0.0 && self.resolution.is_finite() {
            Ok(())
        } else {
            Err(Error::config(format!(
                "metric grid resolution must be positive, got {}",
                self.resolution
            )))
        }
    }

    /// Distance between two parameter vectors of `family`.
    pub(crate) fn param_distance(&self, family: &PolicyFamily, a: &Coords, b: &Coords) -> f64 {
        match self.mode {
            MetricMode::ParamEuclid => a.dist(b) / family.lip_param,
            MetricMode::SupGrid => {
                let grid = GridAxes::new(&family.states, self.resolution);
                let mut sup: f64 = 0.0;
                grid.for_each(|s| {
                    let d = (family.evaluate_params(a, s) - family.evaluate_params(b, s)).abs();
                    sup = sup.max(d);
                });
                sup
            }
        }
    }
}

/// Distance between two policies of the same family.
pub fn policy_distance(
    a: &ParamPolicy,
    b: &ParamPolicy,
    family: &PolicyFamily,
    metric: &MetricSpec,
) -> Result<f64> {
    if a.kind != b.kind || a.kind != family.kind {
        return Err(Error::usage(format!(
            "cannot compare policies of families `{}` and `{}`",
            a.kind.name(),
            b.kind.name()
        )));
    }
    metric.validate()?;
    Ok(metric.param_distance(family, &a.w, &b.w))
}
