//! Seeded simulation loop, fixed-policy rollouts and regret bookkeeping.

use alloc::vec::Vec;

use crate::agent::{ActivationEvent, Agent, AgentKind, AgentStats, EpisodeRecord};
use crate::env::{ActionVec, EnvModel, StateVec};
use crate::error::Result;
use crate::math::{sqrt, CompensatedSum, Coords};
use crate::policy::PolicyFamily;
use crate::rng::{self, ENV_STREAM, ORACLE_STREAM};

/// End-of-run state of one active policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySnapshot {
    pub id: usize,
    pub w: Coords,
    pub plays: u64,
    pub episodes: u64,
    pub mean: f64,
    pub radius: f64,
    pub index: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub agent: AgentKind,
    pub seed: u64,
    pub rewards: Vec<f64>,
    pub raw_rewards: Vec<f64>,
    /// Activation ordinal of the policy acting at each step.
    pub policy_ids: Vec<u32>,
    pub episodes: Vec<EpisodeRecord>,
    pub activations: Vec<ActivationEvent>,
    pub final_policies: Vec<PolicySnapshot>,
    pub stats: AgentStats,
}

impl RunResult {
    pub fn horizon(&self) -> usize {
        self.rewards.len()
    }

    /// Episode ordinal of each step.
    pub fn episode_ids(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.rewards.len());
        for (k, ep) in self.episodes.iter().enumerate() {
            let end = self
                .episodes
                .get(k + 1)
                .map_or(self.rewards.len() as u64, |e| e.start);
            out.extend((ep.start..end).map(|_| k as u32));
        }
        out
    }
}

pub fn snapshot(agent: &Agent) -> Vec<PolicySnapshot> {
    agent
        .records()
        .iter()
        .map(|r| PolicySnapshot {
            id: r.id,
            w: r.policy.w,
            plays: r.plays,
            episodes: r.episodes,
            mean: r.mean(),
            radius: agent.radius(r.id),
            index: agent.index(r.id),
        })
        .collect()
}

/// Runs `agent` on `env` for `horizon` steps with environment noise drawn
/// from the `seed` stream.
pub fn run_agent(env: &EnvModel, agent: &mut Agent, horizon: u64, seed: u64) -> Result<RunResult> {
    let mut rng = rng::stream(seed, ENV_STREAM);
    let mut state = env.reset(&mut rng);
    let n = horizon as usize;
    let mut rewards = Vec::with_capacity(n);
    let mut raw_rewards = Vec::with_capacity(n);
    let mut policy_ids = Vec::with_capacity(n);
    for _ in 0..horizon {
        let a = agent.act(&state.obs)?;
        let tr = env.step(&state, &a, &mut rng);
        agent.observe(&state.obs, tr.reward, &tr.next.obs)?;
        rewards.push(tr.reward);
        raw_rewards.push(tr.raw_reward);
        policy_ids.push(agent.current().unwrap_or(0) as u32);
        state = tr.next;
    }
    Ok(RunResult {
        agent: agent.kind(),
        seed,
        rewards,
        raw_rewards,
        policy_ids,
        episodes: agent.episodes().to_vec(),
        activations: agent.activations().to_vec(),
        final_policies: snapshot(agent),
        stats: agent.stats(),
    })
}

/// Average clipped and raw reward of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutMean {
    pub reward: f64,
    pub raw_reward: f64,
}

/// Plays the fixed policy `w` for `burn_in + steps` steps and averages the
/// rewards after the burn-in.
pub fn rollout(env: &EnvModel, family: &PolicyFamily, w: &Coords, steps: u64, burn_in: u64, rng: &mut rng::Stream) -> RolloutMean {
    rollout_with(env, |s| Coords::scalar(family.evaluate_params(w, s)), steps, burn_in, rng)
}

/// [`rollout`] for an arbitrary stationary decision rule.
pub fn rollout_with(
    env: &EnvModel,
    mut policy: impl FnMut(&StateVec) -> ActionVec,
    steps: u64,
    burn_in: u64,
    rng: &mut rng::Stream,
) -> RolloutMean {
    let mut state = env.reset(rng);
    let mut sum = CompensatedSum::new();
    let mut raw = CompensatedSum::new();
    for t in 0..burn_in + steps {
        let a = policy(&state.obs);
        let tr = env.step(&state, &a, rng);
        if t >= burn_in {
            sum.add(tr.reward);
            raw.add(tr.raw_reward);
        }
        state = tr.next;
    }
    let n = steps.max(1) as f64;
    RolloutMean {
        reward: sum.value() / n,
        raw_reward: raw.value() / n,
    }
}

/// Mean and standard error over independent rollouts of one policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSample {
    pub mean: f64,
    pub stderr: f64,
    pub raw_mean: f64,
}

/// Rollout-based gain of policy `w`; replication `i` draws from oracle
/// stream `(seed, key + i)`.
pub fn estimate_gain(
    env: &EnvModel,
    family: &PolicyFamily,
    w: &Coords,
    steps: u64,
    burn_in: u64,
    replications: u32,
    seed: u64,
    key: u64,
) -> GainSample {
    let means: Vec<RolloutMean> = (0..replications.max(1) as u64)
        .map(|i| {
            let mut rng = rng::indexed_stream(seed, ORACLE_STREAM, key.wrapping_mul(1 << 20).wrapping_add(i));
            rollout(env, family, w, steps, burn_in, &mut rng)
        })
        .collect();
    let n = means.len() as f64;
    let mean = means.iter().map(|m| m.reward).sum::<f64>() / n;
    let raw_mean = means.iter().map(|m| m.raw_reward).sum::<f64>() / n;
    let stderr = if means.len() > 1 {
        let var = means.iter().map(|m| (m.reward - mean) * (m.reward - mean)).sum::<f64>() / (n - 1.0);
        sqrt(var / n)
    } else {
        0.0
    };
    GainSample {
        mean,
        stderr,
        raw_mean,
    }
}

/// `R(t) = t·J − Σ_{i<t} r_i` for `t = 1..=T`.
pub fn regret_curve(rewards: &[f64], j_star: f64) -> Vec<f64> {
    let mut acc = CompensatedSum::new();
    rewards
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            acc.add(-r);
            let mut total = acc;
            total.add((i + 1) as f64 * j_star);
            total.value()
        })
        .collect()
}

/// Pointwise mean and standard error of equally long curves.
pub fn mean_curve(curves: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let Some(first) = curves.first() else {
        return Err(crate::Error::usage("no curves to aggregate"));
    };
    if curves.iter().any(|c| c.len() != first.len()) {
        return Err(crate::Error::usage("curves differ in length"));
    }
    let n = curves.len() as f64;
    let mut mean = Vec::with_capacity(first.len());
    let mut stderr = Vec::with_capacity(first.len());
    for t in 0..first.len() {
        let m = curves.iter().map(|c| c[t]).sum::<f64>() / n;
        let var = if curves.len() > 1 {
            curves.iter().map(|c| (c[t] - m) * (c[t] - m)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean.push(m);
        stderr.push(sqrt(var / n));
    }
    Ok((mean, stderr))
}
