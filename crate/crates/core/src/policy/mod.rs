//! Finitely parameterized policy families, the policy metric and the covering
//! oracle used to activate new policies.

mod cover;
mod family;
mod metric;

pub use cover::{find_uncovered, CoverGrid, GridAxes, PolicyBall};
pub use family::{FamilyKind, ParamPolicy, PolicyFamily};
pub use metric::{policy_distance, MetricMode, MetricSpec};

use crate::math::ceil_log_inv;
use crate::{Error, Result};

/// Lipschitz constant of the average reward with respect to the sup-norm
/// policy metric: `L_r + L_p / (2(1-α)) · (⌈log_{1/α} C⌉ + 1)`.
pub fn lipschitz_gain(lip_reward: f64, lip_kernel: f64, c: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(alloc::format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(c > 0.0) {
        return Err(Error::domain(alloc::format!("C must be positive, got {c}")));
    }
    Ok(lip_reward + lip_kernel / (2.0 * (1.0 - alpha)) * (ceil_log_inv(c, alpha) + 1.0))
}
