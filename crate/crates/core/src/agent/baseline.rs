use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{BoxBounds, Coords};
use crate::policy::{GridAxes, ParamPolicy, PolicyFamily};

pub const DEFAULT_NET_CAP: usize = 1_000_000;

/// Fixed ε-net of the parameter box.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformNet {
    pub epsilon: f64,
    pub policies: Vec<ParamPolicy>,
}

/// Lexicographic endpoint-inclusive grid with spacing `ε·L_W`. An axis no
/// wider than the spacing gets its midpoint only.
pub fn build_net(family: &PolicyFamily, epsilon: f64, cap: usize) -> Result<UniformNet> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::config(alloc::format!("epsilon must be positive, got {epsilon}")));
    }
    let spacing = epsilon * family.lip_param;
    let sides = family.params.sides();
    let mut count = 1.0f64;
    for side in sides {
        if side.width() > spacing {
            count *= libm::ceil(side.width() / spacing) + 1.0;
        }
    }
    if count > cap as f64 {
        return Err(Error::config(alloc::format!(
            "epsilon {epsilon} gives about {count} policies, above the cap of {cap}"
        )));
    }
    let axes: Vec<Vec<f64>> = sides
        .iter()
        .map(|side| {
            if side.width() > spacing {
                let one = BoxBounds::new(alloc::vec![*side]);
                GridAxes::new(&one, spacing).axis(0).to_vec()
            } else {
                alloc::vec![0.5 * (side.lo + side.hi)]
            }
        })
        .collect();
    let mut policies = Vec::with_capacity(count as usize);
    let mut idx = alloc::vec![0usize; axes.len()];
    'outer: loop {
        let w: Vec<f64> = idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect();
        policies.push(family.policy(Coords::new(&w)));
        for k in (0..axes.len()).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    Ok(UniformNet { epsilon, policies })
}
