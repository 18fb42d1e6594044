use rand::Rng;

use super::EnvState;
use crate::math::Coords;
use crate::rng::Stream;

/// Test chain on `S = [0, 1]`, `A = [0, 1]` with a closed-form gain.
///
/// With probability `stay` the state is kept. Otherwise the next state is
/// drawn uniformly from the right half `[1/2, 1]` with probability `a` and from
/// the left half `[0, 1/2)` with probability `1 - a`. The reward is the state.
/// For `stay = 0` the next state does not depend on the current one, so every
/// policy mixes in a single step.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoArmChain {
    pub stay: f64,
}

impl TwoArmChain {
    pub fn new(stay: f64) -> Self {
        Self { stay }
    }

    pub fn reset(&self, rng: &mut Stream) -> EnvState {
        EnvState::observed(Coords::scalar(rng.random::<f64>()))
    }

    pub fn reward(s: f64) -> f64 {
        s
    }

    pub fn step(&self, state: &EnvState, a: f64, rng: &mut Stream) -> EnvState {
        let u_stay: f64 = rng.random();
        let u_arm: f64 = rng.random();
        let u_pos: f64 = rng.random();
        if u_stay < self.stay {
            return *state;
        }
        let next = if u_arm < a.clamp(0.0, 1.0) {
            0.5 + 0.5 * u_pos
        } else {
            0.5 * u_pos
        };
        EnvState::observed(Coords::scalar(next))
    }

    /// Stationary mass of the right half for a policy whose average action is
    /// `left_avg` over `[0, 1/2)` and `right_avg` over `[1/2, 1]`.
    pub fn stationary_right_mass(left_avg: f64, right_avg: f64) -> f64 {
        left_avg / (1.0 - right_avg + left_avg)
    }

    /// Exact gain of the constant policy `a`.
    pub fn constant_policy_gain(a: f64) -> f64 {
        let m = Self::stationary_right_mass(a, a);
        0.75 * m + 0.25 * (1.0 - m)
    }

    /// Stationary density of the constant policy `a` at state `s`.
    pub fn constant_policy_density(a: f64, s: f64) -> f64 {
        if s >= 0.5 {
            2.0 * a
        } else {
            2.0 * (1.0 - a)
        }
    }
}
