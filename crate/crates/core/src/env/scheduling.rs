use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::EnvState;
use crate::math::{sqrt, Coords};
use crate::rng::Stream;

/// Transmission scheduling for remote estimation over a Gilbert-Elliott
/// channel.
///
/// The agent observes `(e, b)`: the estimation error and its belief that the
/// channel is good. The channel state itself is hidden. A transmission attempt
/// (`a >= 1/2`) over a good channel resets the error to the fresh process
/// noise; the attempt is acknowledged, revealing the channel state.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheduling {
    pub beta: f64,
    pub lambda: f64,
    pub p01: f64,
    pub p11: f64,
    pub e_max: f64,
}

/// One step of the channel belief recursion.
///
/// After an attempt (`transmit`) the acknowledgement reveals the channel, so
/// the belief becomes the one-step prediction `p_{c,1}`. Otherwise the belief
/// is propagated through the channel chain.
pub fn belief_update(b: f64, transmit: bool, observed: Option<u8>, p01: f64, p11: f64) -> f64 {
    let next = match (transmit, observed) {
        (true, Some(1)) => p11,
        (true, Some(_)) => p01,
        _ => b * p11 + (1.0 - b) * p01,
    };
    next.clamp(0.0, 1.0)
}

impl Scheduling {
    pub const DEFAULT_LAMBDA: f64 = 2.0;

    pub fn new(beta: f64, lambda: f64, p01: f64, p11: f64, e_max: f64) -> Self {
        Self {
            beta,
            lambda,
            p01,
            p11,
            e_max,
        }
    }

    /// Stationary probability that the channel is good.
    pub fn stationary_good(&self) -> f64 {
        self.p01 / (1.0 + self.p01 - self.p11)
    }

    fn normalizer(&self) -> f64 {
        self.e_max * self.e_max + self.lambda
    }

    pub fn raw_reward(&self, e: f64, a: f64) -> f64 {
        let e = e.clamp(-self.e_max, self.e_max);
        let tx = if a >= 0.5 { 1.0 } else { 0.0 };
        -e * e - self.lambda * tx
    }

    /// Affine image of the raw reward onto `[0, 1]`.
    pub fn reward(&self, e: f64, a: f64) -> f64 {
        1.0 + self.raw_reward(e, a) / self.normalizer()
    }

    pub fn reward_lipschitz(&self) -> f64 {
        let de = 2.0 * self.e_max / self.normalizer();
        let da = self.lambda / self.normalizer();
        sqrt(de * de + da * da)
    }

    pub fn reset(&self, rng: &mut Stream) -> EnvState {
        let u: f64 = rng.random();
        let pi = self.stationary_good();
        EnvState {
            obs: Coords::new(&[0.0, pi]),
            channel: u8::from(u < pi),
        }
    }

    pub fn step(&self, state: &EnvState, a: f64, rng: &mut Stream) -> EnvState {
        let w: f64 = StandardNormal.sample(rng);
        let u: f64 = rng.random();
        let e = state.obs[0];
        let b = state.obs[1];
        let c = state.channel;
        let transmit = a >= 0.5;
        let delivered = if transmit && c == 1 { 1.0 } else { 0.0 };
        let e_next = ((self.beta * e + w) - self.beta * delivered * e).clamp(-self.e_max, self.e_max);
        let observed = if transmit { Some(c) } else { None };
        let b_next = belief_update(b, transmit, observed, self.p01, self.p11);
        let p_good = if c == 1 { self.p11 } else { self.p01 };
        EnvState {
            obs: Coords::new(&[e_next, b_next]),
            channel: u8::from(u < p_good),
        }
    }
}
