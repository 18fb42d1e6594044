//! Problem constants shared by the model-based agent.

use crate::error::{Error, Result};
use crate::math::{ceil_log_inv, powf, powi, sqrt};
use crate::policy::lipschitz_gain;

/// User-facing inputs from which the derived constants are computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantInputs {
    pub alpha: f64,
    pub c: f64,
    pub lip_reward: f64,
    pub lip_kernel: f64,
    pub lip_policy: f64,
    pub c_p: f64,
    pub c_b: f64,
    pub c_f: f64,
    pub kappa: f64,
    pub kappa_prime: f64,
    pub state_dim: usize,
}

impl ConstantInputs {
    pub fn new(alpha: f64, c: f64, lip_reward: f64, lip_kernel: f64, state_dim: usize) -> Self {
        Self {
            alpha,
            c,
            lip_reward,
            lip_kernel,
            lip_policy: 0.0,
            c_p: 0.0,
            c_b: 1.0,
            c_f: 1.0,
            kappa: 1.0,
            kappa_prime: 1.0,
            state_dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub inputs: ConstantInputs,
    pub m_star: f64,
    pub m_bar: f64,
    pub c_eta: f64,
    pub c_v: f64,
    pub c_ub: f64,
    pub c_diam: f64,
    pub lip_gain: f64,
    /// Radius divisor of the near-optimal band covers: `2(max(2, C_ub) + L_J)`.
    pub c_zoom: f64,
}

pub fn derive_constants(inputs: ConstantInputs) -> Result<Constants> {
    let lip_gain = lipschitz_gain(inputs.lip_reward, inputs.lip_kernel, inputs.c, inputs.alpha)?;
    if !(inputs.kappa_prime > 0.0) {
        return Err(Error::domain("kappa' must be positive"));
    }
    let ConstantInputs {
        alpha,
        c,
        lip_reward,
        lip_kernel,
        lip_policy,
        ..
    } = inputs;
    let d = inputs.state_dim as f64;
    let m_star = ceil_log_inv(c, alpha) + 1.0;
    let c_eta = 3.0 * (1.0 + (1.0 + lip_policy) * lip_kernel);
    let reach = powi(c_eta * sqrt(d) * (m_star + 1.0) / (1.0 - alpha), inputs.state_dim as i32);
    let m_bar = ceil_log_inv(2.0 * c / inputs.kappa_prime * reach, alpha);
    let hitting = m_bar * (m_bar + 5.0) / 2.0 + 6.0 / inputs.kappa_prime * reach + 2.0 * (m_star + 1.0) / (1.0 - alpha);
    let contraction = (1.0 + lip_reward * (1.0 - alpha) / ((m_star + 1.0) * c_eta))
        / ((1.0 - alpha) * (1.0 - powf(alpha, 1.0 / m_star)));
    let c_v = hitting.max(contraction);
    let c_ub = c_eta * c_v / 2.0 + 2.0 * (1.0 + lip_policy) * lip_reward;
    Ok(Constants {
        inputs,
        m_star,
        m_bar,
        c_eta,
        c_v,
        c_ub,
        c_diam: c_ub,
        lip_gain,
        c_zoom: 2.0 * (c_ub.max(2.0) + lip_gain),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_star_examples() {
        let k = derive_constants(ConstantInputs::new(0.5, 4.0, 1.0, 1.0, 1)).unwrap();
        assert_eq!(k.m_star, 3.0);
        let k = derive_constants(ConstantInputs::new(0.5, 1.0, 1.0, 1.0, 1)).unwrap();
        assert_eq!(k.m_star, 1.0);
        assert_eq!(k.lip_gain, 2.0);
    }

    #[test]
    fn c_eta_example() {
        let mut inputs = ConstantInputs::new(0.5, 1.0, 1.0, 1.0, 1);
        inputs.lip_policy = 1.0;
        assert_eq!(derive_constants(inputs).unwrap().c_eta, 9.0);
    }

    #[test]
    fn hand_computed_chain() {
        // d = 1, C = 1, α = 1/2, L_p = 1, L_φ = 0: C_η = 6, m* = 1,
        // reach = 6·2/0.5 = 24, m̄ = ⌈log₂ 48⌉ = 6,
        // C_V = max(33 + 144 + 8, (1 + L_r/24)/(1/4))
        let inputs = ConstantInputs::new(0.5, 1.0, 1.0, 1.0, 1);
        let k = derive_constants(inputs).unwrap();
        assert_eq!(k.c_eta, 6.0);
        assert_eq!(k.m_bar, 6.0);
        assert_eq!(k.c_v, 185.0);
        assert_eq!(k.c_ub, 6.0 * 185.0 / 2.0 + 2.0);
        assert_eq!(k.c_diam, k.c_ub);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            derive_constants(ConstantInputs::new(1.0, 1.0, 1.0, 1.0, 1)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            derive_constants(ConstantInputs::new(0.5, -1.0, 1.0, 1.0, 1)),
            Err(Error::Domain(_))
        ));
    }
}
