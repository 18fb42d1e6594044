use alloc::vec;
use alloc::vec::Vec;

use super::metric::{MetricMode, MetricSpec};
use super::{ParamPolicy, PolicyFamily};
use crate::math::{floor, BoxBounds, Coords};
use crate::{Error, Result};

/// Closed ball in policy space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyBall {
    pub center: ParamPolicy,
    pub radius: f64,
}

/// Points are covered when their distance exceeds the radius by at most this.
const COVER_SLACK: f64 = 1e-12;

/// Endpoint-inclusive lattice over a box, enumerated in lexicographic order
/// (first coordinate slowest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxes {
    axes: Vec<Vec<f64>>,
    strides: Vec<usize>,
    len: usize,
}

impl GridAxes {
    /// Points `lo + i·spacing` inside each side, plus the upper endpoint.
    pub fn new(bounds: &BoxBounds, spacing: f64) -> Self {
        assert!(spacing > 0.0);
        let axes: Vec<Vec<f64>> = bounds
            .sides()
            .iter()
            .map(|side| {
                let width = side.width();
                let n = floor(width / spacing + 1e-9) as usize;
                let mut pts: Vec<f64> = (0..=n).map(|i| side.lo + i as f64 * spacing).collect();
                if let Some(last) = pts.last_mut() {
                    if *last > side.hi {
                        *last = side.hi;
                    }
                }
                if side.hi - pts[pts.len() - 1] > 1e-9 * spacing {
                    pts.push(side.hi);
                }
                pts
            })
            .collect();
        let mut strides = vec![1usize; axes.len()];
        for k in (0..axes.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].len();
        }
        let len = axes.iter().map(Vec::len).product();
        Self { axes, strides, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn axis(&self, k: usize) -> &[f64] {
        &self.axes[k]
    }

    pub fn point(&self, mut index: usize) -> Coords {
        let mut c = Coords::zeros(self.axes.len());
        for (k, axis) in self.axes.iter().enumerate() {
            let i = index / self.strides[k];
            index %= self.strides[k];
            c[k] = axis[i];
        }
        c
    }

    pub fn for_each(&self, mut f: impl FnMut(&Coords)) {
        for i in 0..self.len {
            f(&self.point(i));
        }
    }

    /// Visits the flat indices of all grid points inside the axis-aligned box
    /// `center ± half_width`.
    fn for_each_in_box(&self, center: &Coords, half_width: f64, mut f: impl FnMut(usize, &Coords)) {
        let d = self.axes.len();
        let mut lo = vec![0usize; d];
        let mut hi = vec![0usize; d];
        for k in 0..d {
            let axis = &self.axes[k];
            lo[k] = axis.partition_point(|&x| x < center[k] - half_width);
            hi[k] = axis.partition_point(|&x| x <= center[k] + half_width);
            if lo[k] >= hi[k] {
                return;
            }
        }
        let mut idx = lo.clone();
        let mut p = Coords::zeros(d);
        loop {
            let mut flat = 0;
            for k in 0..d {
                p[k] = self.axes[k][idx[k]];
                flat += idx[k] * self.strides[k];
            }
            f(flat, &p);
            // odometer increment, last axis fastest
            let mut k = d;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < hi[k] {
                    break;
                }
                idx[k] = lo[k];
            }
        }
    }
}

fn covers_whole_box(family: &PolicyFamily, metric: &MetricSpec, center: &Coords, radius: f64) -> bool {
    // Euclidean balls are convex, so checking the corners suffices
    if metric.mode != MetricMode::ParamEuclid {
        return false;
    }
    let d = family.dim();
    let sides = family.params.sides();
    (0..(1usize << d)).all(|mask| {
        let mut corner = Coords::zeros(d);
        for (k, side) in sides.iter().enumerate() {
            corner[k] = if mask & (1 << k) != 0 { side.hi } else { side.lo };
        }
        metric.param_distance(family, center, &corner) <= radius + COVER_SLACK
    })
}

/// Covering oracle over the parameter grid of spacing `resolution`.
///
/// Returns `None` when every grid point lies in some ball, otherwise the first
/// uncovered grid point in lexicographic order.
pub fn find_uncovered(
    balls: &[PolicyBall],
    family: &PolicyFamily,
    resolution: f64,
    metric: &MetricSpec,
) -> Result<Option<ParamPolicy>> {
    if !family.params.is_nonempty() {
        return Err(Error::usage("policy family has an empty parameter box"));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::usage(alloc::format!(
            "oracle resolution must be positive, got {resolution}"
        )));
    }
    metric.validate()?;
    if balls.iter().any(|b| b.center.kind != family.kind) {
        return Err(Error::usage("ball center from a different policy family"));
    }
    if balls
        .iter()
        .any(|b| covers_whole_box(family, metric, &b.center.w, b.radius))
    {
        return Ok(None);
    }
    let grid = GridAxes::new(&family.params, resolution);
    match metric.mode {
        MetricMode::ParamEuclid => {
            let mut covered = vec![false; grid.len()];
            for ball in balls {
                let half = ball.radius * family.lip_param + COVER_SLACK;
                grid.for_each_in_box(&ball.center.w, half, |i, p| {
                    if !covered[i] && metric.param_distance(family, &ball.center.w, p) <= ball.radius + COVER_SLACK
                    {
                        covered[i] = true;
                    }
                });
            }
            Ok(covered
                .iter()
                .position(|&c| !c)
                .map(|i| family.policy(grid.point(i))))
        }
        MetricMode::SupGrid => {
            for i in 0..grid.len() {
                let p = grid.point(i);
                let hit = balls
                    .iter()
                    .any(|b| metric.param_distance(family, &b.center.w, &p) <= b.radius + COVER_SLACK);
                if !hit {
                    return Ok(Some(family.policy(p)));
                }
            }
            Ok(None)
        }
    }
}

/// Incrementally maintained coverage counts over a fixed parameter grid.
///
/// Equivalent to calling [`find_uncovered`] with the same balls and
/// resolution, but a radius change only touches the grid points near that
/// ball. Balls that cover the whole box are tracked by a single counter.
#[derive(Debug, Clone)]
pub struct CoverGrid {
    grid: GridAxes,
    resolution: f64,
    counts: Vec<u32>,
    full_cover: usize,
    zeros: usize,
}

impl CoverGrid {
    pub fn new(family: &PolicyFamily, resolution: f64) -> Self {
        let grid = GridAxes::new(&family.params, resolution);
        let n = grid.len();
        Self {
            grid,
            resolution,
            counts: vec![0; n],
            full_cover: 0,
            zeros: n,
        }
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn apply(&mut self, family: &PolicyFamily, metric: &MetricSpec, center: &Coords, radius: f64, add: bool) {
        if covers_whole_box(family, metric, center, radius) {
            if add {
                self.full_cover += 1;
            } else {
                self.full_cover -= 1;
            }
            return;
        }
        let counts = &mut self.counts;
        let zeros = &mut self.zeros;
        let mut visit = |i: usize, p: &Coords| {
            if metric.param_distance(family, center, p) <= radius + COVER_SLACK {
                if add {
                    if counts[i] == 0 {
                        *zeros -= 1;
                    }
                    counts[i] += 1;
                } else {
                    counts[i] -= 1;
                    if counts[i] == 0 {
                        *zeros += 1;
                    }
                }
            }
        };
        match metric.mode {
            MetricMode::ParamEuclid => {
                let half = radius * family.lip_param + COVER_SLACK;
                self.grid.for_each_in_box(center, half, visit);
            }
            MetricMode::SupGrid => {
                for i in 0..self.grid.len() {
                    let p = self.grid.point(i);
                    visit(i, &p);
                }
            }
        }
    }

    pub fn add_ball(&mut self, family: &PolicyFamily, metric: &MetricSpec, center: &Coords, radius: f64) {
        self.apply(family, metric, center, radius, true);
    }

    pub fn remove_ball(&mut self, family: &PolicyFamily, metric: &MetricSpec, center: &Coords, radius: f64) {
        self.apply(family, metric, center, radius, false);
    }

    pub fn is_covered(&self) -> bool {
        self.full_cover > 0 || self.zeros == 0
    }

    /// First uncovered grid point in lexicographic order.
    pub fn first_uncovered(&self) -> Option<Coords> {
        self.first_uncovered_from(0).map(|i| self.grid.point(i))
    }

    /// Flat index of the first uncovered grid point at or after `start`.
    pub fn first_uncovered_from(&self, start: usize) -> Option<usize> {
        if self.is_covered() {
            return None;
        }
        self.counts[start.min(self.counts.len())..]
            .iter()
            .position(|&c| c == 0)
            .map(|i| i + start)
    }

    pub fn point(&self, index: usize) -> Coords {
        self.grid.point(index)
    }
}
