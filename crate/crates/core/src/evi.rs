//! Extended value iteration over an L1 confidence ball of kernels.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::ConfidenceBall;
use crate::math::ceil;

const SIMPLEX_TOL: f64 = 1e-9;

/// Maximizes `θ·values` over the simplex points within L1 distance `eta` of
/// `center`. Returns the maximizer and its value.
pub fn inner_max(values: &[f64], center: &[f64], eta: f64) -> Result<(Vec<f64>, f64)> {
    check_simplex(center)?;
    if values.len() != center.len() {
        return Err(Error::usage("values and center differ in length"));
    }
    if !(eta >= 0.0) {
        return Err(Error::usage("radius must be nonnegative"));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut theta = center.to_vec();
    shift_mass(&mut theta, &order, eta);
    let value = dot(&theta, values);
    Ok((theta, value))
}

fn check_simplex(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::usage("empty probability vector"));
    }
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::usage("center row is not a probability vector"));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `order` sorts coordinates by ascending value; its last entry is the best.
fn shift_mass(theta: &mut [f64], order: &[usize], eta: f64) {
    let Some((&best, rest)) = order.split_last() else {
        return;
    };
    let add = (eta / 2.0).min(1.0 - theta[best]).max(0.0);
    if add >= 1.0 - theta[best] {
        theta.iter_mut().for_each(|x| *x = 0.0);
        theta[best] = 1.0;
        return;
    }
    theta[best] += add;
    let mut left = add;
    for &i in rest {
        if left <= 0.0 {
            break;
        }
        let take = theta[i].min(left);
        theta[i] -= take;
        left -= take;
    }
}

fn shifted_value(center: &[f64], values: &[f64], order: &[usize], eta: f64, scratch: &mut [f64]) -> f64 {
    scratch.copy_from_slice(center);
    shift_mass(scratch, order, eta);
    dot(scratch, values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EviOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl EviOptions {
    pub const DEFAULT_TOL: f64 = 1e-6;

    /// Default tolerance and an iteration budget scaled by the state count
    /// and the mixing time proxy `1/(1−α)`.
    pub fn for_states(states: usize, alpha: f64) -> Self {
        let mix = ceil(1.0 / (1.0 - alpha)) as usize;
        Self {
            tol: Self::DEFAULT_TOL,
            max_iter: 10 * (states + mix) * 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EviResult {
    pub gain: f64,
    pub iterations: usize,
    pub final_span_delta: f64,
    /// Largest span of the renormalized value vector over all sweeps.
    pub max_value_span: f64,
}

/// Finite extended chain: each state reads its successor law from one row of
/// a row-stochastic center matrix, perturbed within that row's L1 radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedChain {
    pub states: usize,
    /// Row-major `radii.len() × states`.
    pub rows: Vec<f64>,
    pub radii: Vec<f64>,
    /// Row used by each state.
    pub row_of: Vec<usize>,
}

impl ExtendedChain {
    pub fn new(states: usize, rows: Vec<f64>, radii: Vec<f64>, row_of: Vec<usize>) -> Result<Self> {
        if rows.len() != radii.len() * states || row_of.len() != states {
            return Err(Error::usage("extended chain shape mismatch"));
        }
        if row_of.iter().any(|&r| r >= radii.len()) {
            return Err(Error::usage("row index out of range"));
        }
        if radii.iter().any(|&r| !(r >= 0.0)) {
            return Err(Error::usage("radius must be nonnegative"));
        }
        for row in rows.chunks(states.max(1)) {
            check_simplex(row)?;
        }
        Ok(Self {
            states,
            rows,
            radii,
            row_of,
        })
    }

    /// One state per row, no perturbation.
    pub fn markov(states: usize, rows: Vec<f64>) -> Result<Self> {
        Self::new(states, rows, vec![0.0; states], (0..states).collect())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.states..(i + 1) * self.states]
    }

    /// Optimistic average reward of the chain under `rewards`.
    pub fn gain(&self, rewards: &[f64], opts: &EviOptions) -> Result<EviResult> {
        if rewards.len() != self.states {
            return Err(Error::usage("reward vector length mismatch"));
        }
        if rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::usage("rewards must be finite"));
        }
        let n = self.states;
        let mut v = vec![0.0f64; n];
        let mut next = vec![0.0; n];
        let mut order: Vec<usize> = (0..n).collect();
        let mut scratch = vec![0.0; n];
        let mut row_values = vec![0.0; self.radii.len()];
        let mut max_value_span = 0.0f64;
        let mut last = (f64::INFINITY, 0.0);
        for iter in 1..=opts.max_iter {
            order.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
            for (i, out) in row_values.iter_mut().enumerate() {
                *out = shifted_value(self.row(i), &v, &order, self.radii[i], &mut scratch);
            }
            let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
            for s in 0..n {
                next[s] = rewards[s] + row_values[self.row_of[s]];
                let delta = next[s] - v[s];
                hi = hi.max(delta);
                lo = lo.min(delta);
            }
            let span = hi - lo;
            let gain = 0.5 * (hi + lo);
            let floor = next.iter().copied().fold(f64::INFINITY, f64::min);
            for (dst, src) in v.iter_mut().zip(&next) {
                *dst = src - floor;
            }
            let value_span = v.iter().copied().fold(0.0, f64::max);
            max_value_span = max_value_span.max(value_span);
            if span <= opts.tol {
                return Ok(EviResult {
                    gain,
                    iterations: iter,
                    final_span_delta: span,
                    max_value_span,
                });
            }
            last = (span, gain);
        }
        Err(Error::NonConvergence {
            iterations: opts.max_iter,
            span: last.0,
            gain: last.1,
        })
    }
}

impl ConfidenceBall {
    /// Chain over the fine grid; each fine cell uses its leaf's row.
    pub fn fine_chain(&self) -> ExtendedChain {
        ExtendedChain {
            states: self.center.cols(),
            rows: self.center.probs.clone(),
            radii: self.radii.clone(),
            row_of: self.dest_leaf.clone(),
        }
    }

    /// Chain over the leaves with destination mass aggregated per leaf.
    pub fn leaf_chain(&self) -> ExtendedChain {
        let leaves = self.leaves();
        let mut rows = vec![0.0; leaves * leaves];
        for i in 0..leaves {
            for (p, &leaf) in self.center.row(i).iter().zip(&self.dest_leaf) {
                rows[i * leaves + leaf] += p;
            }
        }
        ExtendedChain {
            states: leaves,
            rows,
            radii: self.radii.clone(),
            row_of: (0..leaves).collect(),
        }
    }
}

/// Optimistic gain over the fine grid with per-fine-cell rewards.
pub fn evi_gain(ball: &ConfidenceBall, rewards: &[f64], opts: &EviOptions) -> Result<EviResult> {
    ball.fine_chain().gain(rewards, opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterEstimate {
    pub raw: EviResult,
    /// `raw.gain / c_diam`.
    pub value: f64,
}

/// Approximate policy diameter: optimistic gain over the leaves with the
/// leaf diameters as rewards, scaled by `1/c_diam`.
pub fn approx_diameter(
    ball: &ConfidenceBall,
    cell_diams: &[f64],
    c_diam: f64,
    opts: &EviOptions,
) -> Result<DiameterEstimate> {
    let raw = ball.leaf_chain().gain(cell_diams, opts)?;
    Ok(DiameterEstimate {
        raw,
        value: raw.gain / c_diam,
    })
}
