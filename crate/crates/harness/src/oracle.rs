//! Rollout oracle for the best average reward attainable within a family.

use std::path::{Path, PathBuf};

use policy_zoom_core::env::{EnvModel, EnvSpec};
use policy_zoom_core::math::{ceil_log_inv, Coords};
use policy_zoom_core::policy::{GridAxes, PolicyFamily};
use policy_zoom_core::sim::{estimate_gain, rollout_with};
use policy_zoom_core::rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::OracleBudget;
use crate::error::{HarnessError, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Oracle gain of one grid policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridGain {
    pub w: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    pub raw_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainEstimate {
    pub j_star: f64,
    /// Half width of the 95% interval around `j_star`.
    pub half_width: f64,
    pub method: String,
    /// Parameter of the best grid policy.
    pub argmax: Vec<f64>,
    /// Largest raw-scale grid gain.
    pub raw_j_star: f64,
    pub burn_in: u64,
    pub budget: OracleBudget,
    pub grid: Vec<GridGain>,
}

impl GainEstimate {
    /// The grid policy closest to `w` in parameter space.
    pub fn nearest(&self, w: &[f64]) -> &GridGain {
        let d2 = |g: &GridGain| g.w.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        self.grid
            .iter()
            .min_by(|a, b| d2(a).total_cmp(&d2(b)))
            .expect("oracle grid is never empty")
    }

    /// Clipped-scale gap `J* - J(w)` at the nearest grid point.
    pub fn gap(&self, w: &[f64]) -> f64 {
        self.j_star - self.nearest(w).mean
    }

    /// Raw-scale gap at the nearest grid point.
    pub fn raw_gap(&self, w: &[f64]) -> f64 {
        self.raw_j_star - self.nearest(w).raw_mean
    }
}

/// Burn-in before averaging: ten times the mixing scale `⌈log_{1/α} C⌉ + 1`.
pub fn burn_in(env: &EnvModel) -> u64 {
    10 * (ceil_log_inv(env.ergodicity_c, env.ergodicity_alpha) as u64 + 1)
}

/// Evaluates every grid policy of `family` and returns the best.
pub fn estimate_optimal_gain(env: &EnvModel, family: &PolicyFamily, budget: &OracleBudget) -> Result<GainEstimate> {
    budget.validate()?;
    let axes = GridAxes::new(&family.params, budget.resolution);
    let burn_in = burn_in(env);
    let grid: Vec<GridGain> = (0..axes.len())
        .into_par_iter()
        .map(|i| {
            let w = axes.point(i);
            let g = estimate_gain(
                env,
                family,
                &w,
                budget.rollout,
                burn_in,
                budget.replications,
                budget.seed,
                i as u64,
            );
            GridGain {
                w: w.as_slice().to_vec(),
                mean: g.mean,
                stderr: g.stderr,
                raw_mean: g.raw_mean,
            }
        })
        .collect();
    let best = grid
        .iter()
        .enumerate()
        .fold(0, |b, (i, g)| if g.mean > grid[b].mean { i } else { b });
    let raw_j_star = grid.iter().map(|g| g.raw_mean).fold(f64::NEG_INFINITY, f64::max);
    Ok(GainEstimate {
        j_star: grid[best].mean.clamp(0.0, 1.0),
        half_width: Z95 * grid[best].stderr,
        method: format!(
            "grid max over {} policies (spacing {}), {} replications of {} steps after {} burn-in",
            grid.len(),
            budget.resolution,
            budget.replications,
            budget.rollout,
            burn_in
        ),
        argmax: grid[best].w.clone(),
        raw_j_star,
        burn_in,
        budget: *budget,
        grid,
    })
}

#[derive(Serialize)]
struct CacheKey<'a> {
    version: u32,
    env: &'a str,
    env_params: &'a std::collections::BTreeMap<String, f64>,
    family: &'a str,
    params: Vec<[f64; 2]>,
    budget: &'a OracleBudget,
    burn_in: u64,
}

/// Hex digest identifying an oracle computation.
pub fn cache_key(env_spec: &EnvSpec, env: &EnvModel, family: &PolicyFamily, budget: &OracleBudget) -> String {
    let key = CacheKey {
        version: 1,
        env: &env_spec.name,
        env_params: &env_spec.params,
        family: family.kind.name(),
        params: family.params.sides().iter().map(|s| [s.lo, s.hi]).collect(),
        budget,
        burn_in: burn_in(env),
    };
    let text = serde_json::to_string(&key).expect("cache key serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// File-backed cache of oracle results.
#[derive(Debug, Clone)]
pub struct OracleCache {
    dir: PathBuf,
}

impl OracleCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("oracle-{key}.json"))
    }

    /// Cached estimate if present, otherwise computes and stores it.
    pub fn get_or_compute(
        &self,
        env_spec: &EnvSpec,
        env: &EnvModel,
        family: &PolicyFamily,
        budget: &OracleBudget,
    ) -> Result<GainEstimate> {
        let path = self.path(&cache_key(env_spec, env, family, budget));
        if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
            return serde_json::from_str(&text).map_err(|source| HarnessError::Json { path, source });
        }
        let est = estimate_optimal_gain(env, family, budget)?;
        std::fs::create_dir_all(&self.dir).map_err(|e| HarnessError::io(&self.dir, e))?;
        let text = serde_json::to_string(&est).map_err(|source| HarnessError::Json {
            path: path.clone(),
            source,
        })?;
        // write then rename so concurrent readers never see a partial file
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        std::fs::write(&tmp, text).map_err(|e| HarnessError::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| HarnessError::io(&path, e))?;
        Ok(est)
    }
}

/// Mean raw and clipped reward of a fixed decision rule, e.g. the
/// always-transmit baseline of the scheduling problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleGain {
    pub mean: f64,
    pub raw_mean: f64,
    pub raw_half_width: f64,
}

pub fn rule_gain(env: &EnvModel, action: f64, budget: &OracleBudget) -> RuleGain {
    let burn_in = burn_in(env);
    let samples: Vec<_> = (0..budget.replications as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::indexed_stream(budget.seed, "fixed-rule", i);
            rollout_with(env, |_| Coords::scalar(action), budget.rollout, burn_in, &mut rng)
        })
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.reward).sum::<f64>() / n;
    let raw_mean = samples.iter().map(|s| s.raw_reward).sum::<f64>() / n;
    let raw_var = if samples.len() > 1 {
        samples.iter().map(|s| (s.raw_reward - raw_mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    RuleGain {
        mean,
        raw_mean,
        raw_half_width: Z95 * (raw_var / n).sqrt(),
    }
}
