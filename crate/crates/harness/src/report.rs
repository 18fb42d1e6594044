//! Output directory layout of a run or sweep.
//!
//! ```text
//! <out>/run_seed<N>.csv        per-step trajectory of each seed
//! <out>/aggregate.csv          mean regret curve (two or more seeds)
//! <out>/relative_reward.csv    scheduling only: raw return minus always-transmit
//! <out>/summary.json
//! ```

use std::path::{Path, PathBuf};

use policy_zoom_core::env::EnvKind;
use policy_zoom_core::math::CompensatedSum;
use policy_zoom_core::sim::{regret_curve, RunResult};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::experiment::{
    activation_gaps, activation_table, aggregate, aggregate_curves, relative_reward_curve, ActivationTable, GapScale,
    DEFAULT_GAP_EDGES,
};
use crate::export::{write_aggregate_csv, write_curve_csv, write_json, write_run_csv};
use crate::oracle::{rule_gain, GainEstimate, RuleGain};
use crate::zoom::ZoomDiagnostic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub j_star: f64,
    pub half_width: f64,
    pub method: String,
    pub argmax: Vec<f64>,
    pub raw_j_star: f64,
}

impl From<&GainEstimate> for OracleSummary {
    fn from(g: &GainEstimate) -> Self {
        Self {
            j_star: g.j_star,
            half_width: g.half_width,
            method: g.method.clone(),
            argmax: g.argmax.clone(),
            raw_j_star: g.raw_j_star,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub episodes: usize,
    pub activations: usize,
    pub final_regret: f64,
    pub raw_return: f64,
    pub evi_truncations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub horizon: u64,
    pub oracle: OracleSummary,
    /// Mean and standard error of the final regret, for two or more seeds.
    pub final_regret: Option<[f64; 2]>,
    pub runs: Vec<RunSummary>,
    pub activations: ActivationTable,
    pub raw_activations: ActivationTable,
    /// Always-transmit reference of the scheduling problem.
    pub baseline: Option<RuleGain>,
    pub zoom: Option<ZoomDiagnostic>,
}

pub fn run_csv_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("run_seed{seed}.csv"))
}

/// Writes every output file of `runs` into `dir` and returns the summary.
pub fn write_report(
    dir: &Path,
    cfg: &ExperimentConfig,
    runs: &[RunResult],
    oracle: &GainEstimate,
    zoom: Option<ZoomDiagnostic>,
) -> Result<Summary> {
    let setup = cfg.setup()?;
    for run in runs {
        write_run_csv(&run_csv_path(dir, run.seed), run)?;
    }
    let final_regret = if runs.len() >= 2 {
        let agg = aggregate(runs, oracle.j_star)?;
        write_aggregate_csv(&dir.join("aggregate.csv"), &agg)?;
        let t = agg.horizon();
        Some([agg.mean[t - 1], agg.stderr[t - 1]])
    } else {
        None
    };
    let baseline = match setup.env.kind {
        EnvKind::Scheduling(_) => {
            let g = rule_gain(&setup.env, 1.0, &cfg.oracle);
            if runs.len() >= 2 {
                let curves: Vec<Vec<f64>> = runs.iter().map(|r| relative_reward_curve(&r.raw_rewards, g.raw_mean)).collect();
                write_curve_csv(
                    &dir.join("relative_reward.csv"),
                    &["t", "mean_relative_reward", "stderr"],
                    &aggregate_curves(&curves)?,
                )?;
            }
            Some(g)
        }
        _ => None,
    };
    let summary = Summary {
        config: cfg.clone(),
        horizon: cfg.horizon,
        oracle: oracle.into(),
        final_regret,
        runs: runs
            .iter()
            .map(|r| {
                let mut raw = CompensatedSum::new();
                r.raw_rewards.iter().for_each(|&x| raw.add(x));
                RunSummary {
                    seed: r.seed,
                    episodes: r.episodes.len(),
                    activations: r.activations.len(),
                    final_regret: regret_curve(&r.rewards, oracle.j_star).last().copied().unwrap_or(0.0),
                    raw_return: raw.value(),
                    evi_truncations: r.stats.evi_truncations,
                }
            })
            .collect(),
        activations: activation_table(
            &activation_gaps(runs, oracle, GapScale::Clipped),
            GapScale::Clipped,
            &DEFAULT_GAP_EDGES,
        ),
        raw_activations: activation_table(&activation_gaps(runs, oracle, GapScale::Raw), GapScale::Raw, &DEFAULT_GAP_EDGES),
        baseline,
        zoom,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}
