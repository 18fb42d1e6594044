use alloc::vec::Vec;

use crate::constants::Constants;
use crate::env::{EnvModel, StateVec};
use crate::error::{Error, Result};
use crate::evi::{approx_diameter, evi_gain, EviOptions, EviResult};
use crate::kernel::{build_ball, ConfidenceBall, RadiusConstants, TransitionLog};
use crate::partition::{PartitionConstants, PartitionTree};
use crate::policy::{ParamPolicy, PolicyFamily};

/// Per-policy model state of the model-based agent.
#[derive(Debug, Clone)]
pub struct MbModel {
    pub tree: PartitionTree,
    pub log: TransitionLog,
    pub gain: f64,
    pub diam_b: f64,
    pub index: f64,
    /// Data arrived since the last evaluation.
    pub dirty: bool,
}

impl MbModel {
    pub fn new(states: &crate::math::BoxBounds, consts: PartitionConstants) -> Result<Self> {
        Ok(Self {
            tree: PartitionTree::new(states, consts)?,
            log: TransitionLog::new(),
            gain: 0.0,
            diam_b: 1.0,
            index: f64::INFINITY,
            dirty: true,
        })
    }

    pub fn record(&mut self, s: &StateVec, next: &StateVec) -> Result<()> {
        let (node, _) = self.tree.record_visit(s)?;
        self.log.record(node, *next);
        self.dirty = true;
        Ok(())
    }
}

/// Everything the model-based index needs besides the per-policy model.
#[derive(Debug, Clone, Copy)]
pub struct MbContext<'a> {
    pub env: &'a EnvModel,
    pub family: &'a PolicyFamily,
    pub constants: &'a Constants,
    pub radius: RadiusConstants,
    pub evi_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MbEvaluation {
    pub gain: EviResult,
    pub diameter: Option<EviResult>,
    pub diam_b: f64,
    pub index: f64,
    /// One of the iterations stopped at its budget; its partial value is used.
    pub truncated: bool,
}

/// Optimistic rewards on the fine grid: `r(s, φ(s))` plus the bias term of
/// the containing leaf.
pub fn optimistic_rewards(ball: &ConfidenceBall, tree: &PartitionTree, policy: &ParamPolicy, ctx: &MbContext<'_>) -> Vec<f64> {
    let bonus = (1.0 + ctx.family.lip_policy) * ctx.env.lip_reward;
    ball.center
        .dest
        .cells()
        .zip(&ball.dest_leaf)
        .map(|(cell, &leaf)| {
            let s = cell.rep(tree.bounds());
            let a = ctx.family.evaluate(policy, &s);
            ctx.env.reward(&s, &a) + bonus * ball.center.sources[leaf].diam()
        })
        .collect()
}

fn lenient(result: Result<EviResult>, truncated: &mut bool) -> Result<EviResult> {
    match result {
        Err(Error::NonConvergence {
            iterations,
            span,
            gain,
        }) => {
            *truncated = true;
            Ok(EviResult {
                gain,
                iterations,
                final_span_delta: span,
                max_value_span: f64::NAN,
            })
        }
        other => other,
    }
}

/// Optimistic gain, approximate diameter and index of one policy. A policy
/// without data gets diameter 1.
pub fn mb_evaluate(model: &MbModel, policy: &ParamPolicy, ctx: &MbContext<'_>) -> Result<MbEvaluation> {
    let ball = build_ball(&model.log, &model.tree, &ctx.radius);
    let rewards = optimistic_rewards(&ball, &model.tree, policy, ctx);
    let mut truncated = false;
    let opts = EviOptions {
        tol: ctx.evi_tol,
        ..EviOptions::for_states(rewards.len(), ctx.constants.inputs.alpha)
    };
    let gain = lenient(evi_gain(&ball, &rewards, &opts), &mut truncated)?;
    let (diameter, diam_b) = if model.tree.total_visits() == 0 {
        (None, 1.0)
    } else {
        let diams: Vec<f64> = ball.center.sources.iter().map(|c| c.diam()).collect();
        let opts = EviOptions {
            tol: ctx.evi_tol,
            ..EviOptions::for_states(diams.len(), ctx.constants.inputs.alpha)
        };
        let raw = match approx_diameter(&ball, &diams, ctx.constants.c_diam, &opts) {
            Ok(d) => d.raw,
            Err(e) => lenient(Err(e), &mut truncated)?,
        };
        (Some(raw), raw.gain / ctx.constants.c_diam)
    };
    Ok(MbEvaluation {
        gain,
        diameter,
        diam_b,
        index: mb_index(gain.gain, diam_b, ctx.constants.lip_gain),
        truncated,
    })
}

/// `gain + L_J · diam_b`.
pub fn mb_index(gain: f64, diam_b: f64, lip_gain: f64) -> f64 {
    gain + lip_gain * diam_b
}
