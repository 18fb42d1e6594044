use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::EnvState;
use crate::math::{powi, sqrt, Coords};
use crate::rng::Stream;

/// Continuous RiverSwim on `S = [0, 6]`, `A = [-1, 1]`.
///
/// The swimmer moves left with probability `2(1-a)/5`, stays with probability
/// `0.2` and moves right with probability `2(1+a)/5`; a move has length
/// `(1 + w/2)/2` with Gaussian `w`, and the position is clamped to the river.
#[derive(Debug, Clone, PartialEq)]
pub struct RiverSwim {
    /// Variance of the step-length noise `w`.
    pub noise_var: f64,
    noise_std: f64,
}

impl RiverSwim {
    pub const LENGTH: f64 = 6.0;
    pub const STAY_PROB: f64 = 0.2;
    /// Sup of the reward gradient norm, attained at `(s, a) = (6, 1)`:
    /// `sqrt((1/3)^2 + 1^2)`.
    pub const REWARD_LIPSCHITZ: f64 = 1.054_092_553_389_459_8;

    pub fn new(noise_var: f64) -> Self {
        Self {
            noise_var,
            noise_std: sqrt(noise_var),
        }
    }

    pub fn reset(&self) -> EnvState {
        EnvState::observed(Coords::scalar(0.0))
    }

    pub fn reward(s: f64, a: f64) -> f64 {
        let l = Self::LENGTH;
        0.005 * (powi((s - l) / l, 4) + powi((a - 1.0) / 2.0, 4))
            + 0.5 * (powi(s / l, 4) + powi((a + 1.0) / 2.0, 4))
    }

    /// `(left, stay, right)` move probabilities for action `a`.
    pub fn move_probs(a: f64) -> (f64, f64, f64) {
        let a = a.clamp(-1.0, 1.0);
        (2.0 * (1.0 - a) / 5.0, Self::STAY_PROB, 2.0 * (1.0 + a) / 5.0)
    }

    pub fn step(&self, state: &EnvState, a: f64, rng: &mut Stream) -> EnvState {
        let u: f64 = rng.random();
        let z: f64 = StandardNormal.sample(rng);
        let w = self.noise_std * z;
        let s = state.obs[0];
        let (left, stay, _) = Self::move_probs(a);
        let len = 0.5 * (1.0 + w / 2.0);
        let next = if u < left {
            s - len
        } else if u < left + stay {
            s
        } else {
            s + len
        };
        EnvState::observed(Coords::scalar(next.clamp(0.0, Self::LENGTH)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn reward_at_goal_is_one() {
        assert_eq!(RiverSwim::reward(6.0, 1.0), 1.0);
    }

    #[test]
    fn move_probabilities() {
        let (l, s, r) = RiverSwim::move_probs(1.0);
        assert_eq!(l, 0.0);
        assert_eq!(s, 0.2);
        assert!((r - 0.8).abs() < 1e-15);
        for i in 0..=200 {
            let a = -1.0 + i as f64 / 100.0;
            let (l, s, r) = RiverSwim::move_probs(a);
            assert!((l + s + r - 1.0).abs() < 1e-12);
            assert!(l >= 0.0 && r >= 0.0);
        }
    }

    #[test]
    fn lipschitz_constant_matches_gradient() {
        let expected = sqrt(1.0 / 9.0 + 1.0);
        assert!((RiverSwim::REWARD_LIPSCHITZ - expected).abs() < 1e-15);
    }

    #[test]
    fn swimming_right_reaches_the_goal() {
        let env = RiverSwim::new(0.5);
        let mut rng = rng::stream(1, "rs");
        let mut st = env.reset();
        let mut at_goal = 0;
        for _ in 0..5000 {
            st = env.step(&st, 1.0, &mut rng);
            assert!((0.0..=6.0).contains(&st.obs[0]));
            if st.obs[0] > 5.0 {
                at_goal += 1;
            }
        }
        assert!(at_goal > 4000);
    }
}
