use super::PolicyRecord;
use crate::error::{Error, Result};
use crate::math::sqrt;

/// Inputs of the model-free diameter and index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexConstants {
    pub c: f64,
    pub alpha: f64,
    pub c_f: f64,
    /// `log(T/δ)`.
    pub log_term: f64,
    pub lip_gain: f64,
}

/// Statistical confidence radius of a policy's empirical average reward.
pub fn mf_diameter(rec: &PolicyRecord, k: &IndexConstants) -> f64 {
    let n = rec.plays.max(1) as f64;
    k.c / (1.0 - k.alpha) * (sqrt(k.c_f * k.log_term / n) + (1.0 + rec.episodes as f64) / n)
}

pub fn mf_index(rec: &PolicyRecord, diameter: f64, lip_gain: f64) -> f64 {
    rec.mean() + (1.0 + lip_gain) * diameter
}

/// Position of the largest index; ties go to the earliest activated policy.
pub fn select_policy(indices: &[f64]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in indices.iter().enumerate() {
        if best.is_none_or(|b| x > indices[b]) {
            best = Some(i);
        }
    }
    best.ok_or_else(|| Error::usage("no active policy to select"))
}
