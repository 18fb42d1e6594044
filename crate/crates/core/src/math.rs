//! Small numeric helpers and the fixed-capacity coordinate vector used for
//! states, actions and policy parameters.
//!
//! Transcendental functions go through `libm` so that trajectories are
//! bit-identical across targets and with or without `std`.

use core::ops::{Index, IndexMut};

use crate::MAX_DIM;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn exp2i(n: i32) -> f64 {
    libm::ldexp(1.0, n)
}

/// `⌈log_{1/α}(C)⌉`, clamped below at zero (C ≤ 1 gives 0).
pub fn ceil_log_inv(c: f64, alpha: f64) -> f64 {
    if c <= 1.0 {
        return 0.0;
    }
    let raw = ln(c) / ln(1.0 / alpha);
    // log2(4) must come out as exactly 2, not 2.0000000000000004
    let rounded = libm::round(raw);
    if (raw - rounded).abs() < 1e-12 {
        rounded
    } else {
        ceil(raw)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A short real vector with inline storage (at most [`MAX_DIM`] entries).
#[derive(Clone, Copy, PartialEq)]
pub struct Coords {
    data: [f64; MAX_DIM],
    len: u8,
}

impl Coords {
    pub fn new(values: &[f64]) -> Self {
        assert!(values.len() <= MAX_DIM, "at most {MAX_DIM} coordinates");
        let mut data = [0.0; MAX_DIM];
        data[..values.len()].copy_from_slice(values);
        Self {
            data,
            len: values.len() as u8,
        }
    }

    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_DIM, "at most {MAX_DIM} coordinates");
        Self {
            data: [0.0; MAX_DIM],
            len: len as u8,
        }
    }

    pub fn scalar(x: f64) -> Self {
        Self::new(&[x])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.len()]
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        let n = self.len();
        &mut self.data[..n]
    }

    pub fn dist(&self, other: &Coords) -> f64 {
        debug_assert_eq!(self.len, other.len);
        let mut acc = 0.0;
        for (a, b) in self.as_slice().iter().zip(other.as_slice()) {
            acc += (a - b) * (a - b);
        }
        sqrt(acc)
    }
}

impl Index<usize> for Coords {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Coords {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.as_mut_slice()[i]
    }
}

impl core::fmt::Debug for Coords {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Axis-aligned box, one interval per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    sides: alloc::vec::Vec<Interval>,
}

impl BoxBounds {
    pub fn new(sides: alloc::vec::Vec<Interval>) -> Self {
        assert!(sides.len() <= MAX_DIM);
        Self { sides }
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[Interval] {
        &self.sides
    }

    pub fn is_nonempty(&self) -> bool {
        self.sides
            .iter()
            .all(|s| s.lo.is_finite() && s.hi.is_finite() && s.lo <= s.hi)
    }

    pub fn contains(&self, x: &Coords) -> bool {
        x.len() == self.dim() && self.sides.iter().zip(x.as_slice()).all(|(s, v)| s.contains(*v))
    }

    pub fn clamp(&self, x: &mut Coords) {
        for (s, v) in self.sides.iter().zip(x.as_mut_slice()) {
            *v = s.clamp(*v);
        }
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().map(Interval::width).product()
    }

    /// Euclidean diameter of the box.
    pub fn diameter(&self) -> f64 {
        sqrt(self.sides.iter().map(|s| s.width() * s.width()).sum())
    }

    /// Center of the box.
    pub fn center(&self) -> Coords {
        let mut c = Coords::zeros(self.dim());
        for (i, s) in self.sides.iter().enumerate() {
            c[i] = 0.5 * (s.lo + s.hi);
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_log_exact_powers() {
        assert_eq!(ceil_log_inv(4.0, 0.5), 2.0);
        assert_eq!(ceil_log_inv(1.0, 0.5), 0.0);
        assert_eq!(ceil_log_inv(0.3, 0.5), 0.0);
        assert_eq!(ceil_log_inv(5.0, 0.5), 3.0);
        assert_eq!(ceil_log_inv(8.0, 0.5), 3.0);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }
}
