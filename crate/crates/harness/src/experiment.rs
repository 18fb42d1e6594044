//! Seeded runs, regret aggregation and activation statistics.

use policy_zoom_core::agent::Agent;
use policy_zoom_core::math::CompensatedSum;
use policy_zoom_core::sim::{mean_curve, regret_curve, run_agent, RunResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Setup};
use crate::error::{HarnessError, Result};
use crate::oracle::{GainEstimate, Z95};

/// One seeded trajectory of the configured agent.
pub fn run_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<RunResult> {
    let setup = cfg.setup()?;
    run_setup(&setup, seed)
}

pub fn run_setup(setup: &Setup, seed: u64) -> Result<RunResult> {
    let mut agent = Agent::new(&setup.env, setup.family.clone(), setup.options)?;
    run_agent(&setup.env, &mut agent, setup.options.horizon, seed).map_err(|source| HarnessError::Run {
        seed,
        step: agent.steps(),
        source,
    })
}

/// Runs every seed on the work pool; results come back in seed order.
pub fn sweep(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<RunResult>> {
    let setup = cfg.setup()?;
    seeds.par_iter().map(|&s| run_setup(&setup, s)).collect()
}

/// Pointwise mean regret and its standard error across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl Aggregate {
    pub fn horizon(&self) -> usize {
        self.mean.len()
    }

    /// 95% interval of the mean at step `t` (1-based).
    pub fn interval(&self, t: usize) -> (f64, f64) {
        let (m, s) = (self.mean[t - 1], self.stderr[t - 1]);
        (m - Z95 * s, m + Z95 * s)
    }
}

pub fn aggregate_curves(curves: &[Vec<f64>]) -> Result<Aggregate> {
    if curves.len() < 2 {
        return Err(HarnessError::Usage(format!("aggregation needs at least 2 runs, got {}", curves.len())));
    }
    let (mean, stderr) = mean_curve(curves)?;
    Ok(Aggregate { mean, stderr })
}

/// Mean regret curve of `runs` against `j_star`.
pub fn aggregate(runs: &[RunResult], j_star: f64) -> Result<Aggregate> {
    let curves: Vec<Vec<f64>> = runs.iter().map(|r| regret_curve(&r.rewards, j_star)).collect();
    aggregate_curves(&curves)
}

/// Cumulative raw reward minus `t · baseline` for `t = 1..=T`.
pub fn relative_reward_curve(raw_rewards: &[f64], baseline: f64) -> Vec<f64> {
    let mut acc = CompensatedSum::new();
    raw_rewards
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            acc.add(r);
            let mut total = acc;
            total.add(-((i + 1) as f64) * baseline);
            total.value()
        })
        .collect()
}

/// Scale on which activation gaps are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapScale {
    Clipped,
    Raw,
}

/// Counts of activated policies per gap bucket `[edges[i], edges[i+1])`,
/// the last bucket being unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationTable {
    pub scale: GapScale,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
}

pub const DEFAULT_GAP_EDGES: [f64; 5] = [0.0, 0.05, 0.1, 0.25, 0.5];

/// Share of gaps exceeding `threshold`.
pub fn share_above(gaps: &[f64], threshold: f64) -> f64 {
    if gaps.is_empty() {
        return 0.0;
    }
    gaps.iter().filter(|&&g| g > threshold).count() as f64 / gaps.len() as f64
}

/// Oracle gap of every activated policy across `runs`, in run order.
pub fn activation_gaps(runs: &[RunResult], oracle: &GainEstimate, scale: GapScale) -> Vec<f64> {
    runs.iter()
        .flat_map(|r| r.activations.iter())
        .map(|a| {
            let w = a.policy.w.as_slice();
            match scale {
                GapScale::Clipped => oracle.gap(w),
                GapScale::Raw => oracle.raw_gap(w),
            }
        })
        .collect()
}

pub fn activation_table(gaps: &[f64], scale: GapScale, edges: &[f64]) -> ActivationTable {
    let mut counts = vec![0u64; edges.len()];
    for &g in gaps {
        // negative estimates (noise around the optimum) land in the first bucket
        let k = edges.iter().rposition(|&e| g >= e).unwrap_or(0);
        counts[k] += 1;
    }
    ActivationTable {
        scale,
        edges: edges.to_vec(),
        counts,
        total: gaps.len() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_examples() {
        let a = aggregate_curves(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(a.stderr, vec![0.0; 3]);
        let b = aggregate_curves(&[vec![0.0, 0.0], vec![3.0, 3.0]]).unwrap();
        assert_eq!(b.mean, vec![1.5, 1.5]);
        assert!(matches!(aggregate_curves(&[vec![0.0]]), Err(HarnessError::Usage(_))));
        assert!(aggregate_curves(&[vec![0.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn relative_reward_and_buckets() {
        assert_eq!(relative_reward_curve(&[-1.0, -3.0], -2.0), vec![1.0, 0.0]);
        let t = activation_table(&[-0.01, 0.0, 0.07, 0.3, 0.9, 0.25], GapScale::Raw, &DEFAULT_GAP_EDGES);
        assert_eq!(t.counts, vec![2, 1, 0, 2, 1]);
        assert_eq!(t.total, 6);
        assert_eq!(share_above(&[0.1, 0.3, 0.26, 0.25], 0.25), 0.5);
    }
}
