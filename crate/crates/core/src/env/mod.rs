//! Environment abstraction and the benchmark MDPs.
//!
//! An [`EnvModel`] is immutable after construction; all randomness comes from
//! the caller-supplied stream so that a seed fully determines a trajectory.

mod riverswim;
mod scheduling;
mod two_arm;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;

pub use riverswim::RiverSwim;
pub use scheduling::{belief_update, Scheduling};
pub use two_arm::TwoArmChain;

use crate::math::{BoxBounds, Coords, Interval};
use crate::rng::Stream;
use crate::{Error, Result};

pub type StateVec = Coords;
pub type ActionVec = Coords;

/// Environment name plus numeric parameter overrides.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnvSpec {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

impl EnvSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

/// Full simulator state. `obs` is what the agent sees; `channel` is the hidden
/// channel state of the scheduling problem (unused elsewhere).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvState {
    pub obs: StateVec,
    pub channel: u8,
}

impl EnvState {
    pub fn observed(obs: StateVec) -> Self {
        Self { obs, channel: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: EnvState,
    /// Reward in `[0, 1]`, the quantity the agents learn from.
    pub reward: f64,
    /// Unnormalized reward, logged for reporting.
    pub raw_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvKind {
    RiverSwim(RiverSwim),
    Scheduling(Scheduling),
    TwoArmChain(TwoArmChain),
}

/// A simulatable MDP with its regularity constants.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvModel {
    pub kind: EnvKind,
    pub state_bounds: BoxBounds,
    pub action_bounds: BoxBounds,
    /// Reward Lipschitz constant `L_r`.
    pub lip_reward: f64,
    /// Kernel Lipschitz constant `L_p` (total variation).
    pub lip_kernel: f64,
    /// Uniform ergodicity constant `C`.
    pub ergodicity_c: f64,
    /// Uniform ergodicity rate `α`.
    pub ergodicity_alpha: f64,
}

struct Params<'a> {
    env: &'a str,
    map: &'a BTreeMap<String, f64>,
    used: vec::Vec<&'a str>,
}

impl<'a> Params<'a> {
    fn new(spec: &'a EnvSpec) -> Self {
        Self {
            env: &spec.name,
            map: &spec.params,
            used: vec::Vec::new(),
        }
    }

    fn get(&mut self, key: &'a str, default: f64) -> f64 {
        self.used.push(key);
        self.map.get(key).copied().unwrap_or(default)
    }

    fn finish(self) -> Result<()> {
        for k in self.map.keys() {
            if !self.used.contains(&k.as_str()) {
                return Err(Error::config(format!(
                    "unknown parameter `{k}` for environment `{}`",
                    self.env
                )));
            }
        }
        Ok(())
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

/// Builds a configured environment from its name and parameter map.
pub fn make_env(spec: &EnvSpec) -> Result<EnvModel> {
    let mut p = Params::new(spec);
    let (kind, lr_default, lp_default) = match spec.name.as_str() {
        "riverswim" => {
            let noise_var = p.get("noise_var", 0.5);
            check(noise_var >= 0.0 && noise_var.is_finite(), || {
                format!("riverswim noise_var must be >= 0, got {noise_var}")
            })?;
            (
                EnvKind::RiverSwim(RiverSwim::new(noise_var)),
                RiverSwim::REWARD_LIPSCHITZ,
                1.0,
            )
        }
        "scheduling" => {
            let beta = p.get("beta", 0.9);
            let lambda = p.get("lambda", Scheduling::DEFAULT_LAMBDA);
            let p01 = p.get("p01", 0.2);
            let p11 = p.get("p11", 0.8);
            let e_max = p.get("e_max", 10.0);
            check(beta.abs() < 1.0, || format!("scheduling requires |beta| < 1, got {beta}"))?;
            check(lambda > 0.0 && lambda.is_finite(), || {
                format!("scheduling requires lambda > 0, got {lambda}")
            })?;
            check(p01 > 0.0 && p01 <= 1.0, || format!("p01 must lie in (0, 1], got {p01}"))?;
            check(p11 > 0.0 && p11 <= 1.0, || format!("p11 must lie in (0, 1], got {p11}"))?;
            check(e_max > 0.0 && e_max.is_finite(), || format!("e_max must be > 0, got {e_max}"))?;
            let s = Scheduling::new(beta, lambda, p01, p11, e_max);
            let lr = s.reward_lipschitz();
            (EnvKind::Scheduling(s), lr, 1.0)
        }
        "two_arm_chain" => {
            let stay = p.get("stay", 0.0);
            check((0.0..1.0).contains(&stay), || {
                format!("two_arm_chain stay must lie in [0, 1), got {stay}")
            })?;
            (EnvKind::TwoArmChain(TwoArmChain::new(stay)), 1.0, 1.0)
        }
        other => return Err(Error::config(format!("unknown environment `{other}`"))),
    };
    let lip_reward = p.get("L_r", lr_default);
    let lip_kernel = p.get("L_p", lp_default);
    let ergodicity_c = p.get("C", 1.0);
    let ergodicity_alpha = p.get("alpha", 0.5);
    check(lip_reward >= 0.0 && lip_kernel >= 0.0, || {
        "Lipschitz constants must be nonnegative".to_string()
    })?;
    check(ergodicity_c > 0.0, || format!("ergodicity C must be > 0, got {ergodicity_c}"))?;
    check(ergodicity_alpha > 0.0 && ergodicity_alpha < 1.0, || {
        format!("ergodicity alpha must lie in (0, 1), got {ergodicity_alpha}")
    })?;
    p.finish()?;

    let (state_bounds, action_bounds) = match &kind {
        EnvKind::RiverSwim(_) => (
            BoxBounds::new(vec![Interval::new(0.0, RiverSwim::LENGTH)]),
            BoxBounds::new(vec![Interval::new(-1.0, 1.0)]),
        ),
        EnvKind::Scheduling(s) => (
            BoxBounds::new(vec![Interval::new(-s.e_max, s.e_max), Interval::new(0.0, 1.0)]),
            BoxBounds::new(vec![Interval::new(0.0, 1.0)]),
        ),
        EnvKind::TwoArmChain(_) => (
            BoxBounds::new(vec![Interval::new(0.0, 1.0)]),
            BoxBounds::new(vec![Interval::new(0.0, 1.0)]),
        ),
    };
    Ok(EnvModel {
        kind,
        state_bounds,
        action_bounds,
        lip_reward,
        lip_kernel,
        ergodicity_c,
        ergodicity_alpha,
    })
}

impl EnvModel {
    pub fn name(&self) -> &'static str {
        match self.kind {
            EnvKind::RiverSwim(_) => "riverswim",
            EnvKind::Scheduling(_) => "scheduling",
            EnvKind::TwoArmChain(_) => "two_arm_chain",
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_bounds.dim()
    }

    pub fn action_dim(&self) -> usize {
        self.action_bounds.dim()
    }

    /// Initial state distribution.
    pub fn reset(&self, rng: &mut Stream) -> EnvState {
        match &self.kind {
            EnvKind::RiverSwim(r) => r.reset(),
            EnvKind::Scheduling(s) => s.reset(rng),
            EnvKind::TwoArmChain(c) => c.reset(rng),
        }
    }

    /// Advances the simulator by one step. `action` is clamped into the action
    /// bounds before use.
    pub fn step(&self, state: &EnvState, action: &ActionVec, rng: &mut Stream) -> Transition {
        let mut a = *action;
        self.action_bounds.clamp(&mut a);
        let reward = self.reward(&state.obs, &a);
        let raw_reward = self.raw_reward(&state.obs, &a);
        let next = match &self.kind {
            EnvKind::RiverSwim(r) => r.step(state, a[0], rng),
            EnvKind::Scheduling(s) => s.step(state, a[0], rng),
            EnvKind::TwoArmChain(c) => c.step(state, a[0], rng),
        };
        debug_assert!(self.state_bounds.contains(&next.obs));
        Transition {
            next,
            reward,
            raw_reward,
        }
    }

    /// Reward in `[0, 1]`.
    pub fn reward(&self, s: &StateVec, a: &ActionVec) -> f64 {
        let r = match &self.kind {
            EnvKind::RiverSwim(_) => RiverSwim::reward(s[0], a[0]),
            EnvKind::Scheduling(sch) => sch.reward(s[0], a[0]),
            EnvKind::TwoArmChain(_) => TwoArmChain::reward(s[0]),
        };
        r.clamp(0.0, 1.0)
    }

    /// Unnormalized reward as reported in experiments.
    pub fn raw_reward(&self, s: &StateVec, a: &ActionVec) -> f64 {
        match &self.kind {
            EnvKind::Scheduling(sch) => sch.raw_reward(s[0], a[0]),
            _ => self.reward(s, a),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn riverswim_defaults() {
        let env = make_env(&EnvSpec::new("riverswim")).unwrap();
        assert_eq!(env.state_dim(), 1);
        assert_eq!(env.state_bounds.sides()[0], Interval::new(0.0, 6.0));
        assert_eq!(env.action_bounds.sides()[0], Interval::new(-1.0, 1.0));
    }

    #[test]
    fn scheduling_beta_validation() {
        let env = make_env(&EnvSpec::new("scheduling").with("beta", 0.9)).unwrap();
        match env.kind {
            EnvKind::Scheduling(s) => {
                assert_eq!(s.beta, 0.9);
                assert_eq!(s.lambda, Scheduling::DEFAULT_LAMBDA);
            }
            _ => unreachable!(),
        }
        let err = make_env(&EnvSpec::new("scheduling").with("beta", 1.5)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn unknown_env_and_param() {
        assert!(matches!(make_env(&EnvSpec::new("cartpole")), Err(Error::Config(_))));
        assert!(matches!(
            make_env(&EnvSpec::new("riverswim").with("gamma", 0.3)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            make_env(&EnvSpec::new("riverswim").with("alpha", 1.0)),
            Err(Error::Config(_))
        ));
    }

    fn random_point(b: &BoxBounds, rng: &mut Stream) -> Coords {
        let mut c = Coords::zeros(b.dim());
        for (i, s) in b.sides().iter().enumerate() {
            c[i] = rng.random_range(s.lo..=s.hi);
        }
        c
    }

    #[test]
    fn rewards_stay_in_unit_interval() {
        let mut rng = rng::stream(11, "reward-range");
        for name in ["riverswim", "scheduling", "two_arm_chain"] {
            let env = make_env(&EnvSpec::new(name)).unwrap();
            for _ in 0..1_000_000 {
                let s = random_point(&env.state_bounds, &mut rng);
                let a = random_point(&env.action_bounds, &mut rng);
                let r = env.reward(&s, &a);
                assert!((0.0..=1.0).contains(&r), "{name}: reward {r} at {s:?} {a:?}");
            }
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        for name in ["riverswim", "scheduling", "two_arm_chain"] {
            let env = make_env(&EnvSpec::new(name)).unwrap();
            let run = |seed| {
                let mut rng = rng::stream(seed, rng::ENV_STREAM);
                let mut st = env.reset(&mut rng);
                let mut out = vec::Vec::new();
                for t in 0..2000 {
                    let a = Coords::scalar(if t % 3 == 0 { 1.0 } else { 0.2 });
                    let tr = env.step(&st, &a, &mut rng);
                    out.push((tr.next.obs, tr.reward.to_bits(), tr.raw_reward.to_bits()));
                    st = tr.next;
                }
                out
            };
            assert_eq!(run(5), run(5));
            assert_ne!(run(5), run(6));
        }
    }

    #[test]
    fn riverswim_reward_is_lipschitz() {
        let env = make_env(&EnvSpec::new("riverswim")).unwrap();
        let mut rng = rng::stream(3, "lip");
        for _ in 0..200_000 {
            let s = rng.random_range(0.0..=6.0);
            let a = rng.random_range(-1.0..=1.0);
            let s2 = rng.random_range(0.0..=6.0);
            let a2 = rng.random_range(-1.0..=1.0);
            let num = (RiverSwim::reward(s, a) - RiverSwim::reward(s2, a2)).abs();
            let den = crate::math::sqrt((s - s2) * (s - s2) + (a - a2) * (a - a2));
            if den > 0.0 {
                assert!(num / den <= env.lip_reward + 1e-9);
            }
        }
    }
}
