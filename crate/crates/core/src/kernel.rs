//! Empirical transition kernels on the adaptive partition and the L1
//! confidence ball around them.
//!
//! Pipeline per policy: successor states are logged against the leaf that was
//! active at visit time; a leaf's row bins the successors of its whole lineage
//! at the leaf's own level; the row is extended to a piecewise-constant
//! density and re-binned onto the uniform grid of the finest active level.

use alloc::vec;
use alloc::vec::Vec;

use crate::env::StateVec;
use crate::math::{powf, BoxBounds};
use crate::partition::{cell_at_level, Cell, LevelGrid, PartitionTree};

/// Successor states recorded per partition node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransitionLog {
    successors: Vec<Vec<StateVec>>,
}

impl TransitionLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records that a visit to the leaf `node` was followed by `next`.
    pub fn record(&mut self, node: usize, next: StateVec) {
        if self.successors.len() <= node {
            self.successors.resize_with(node + 1, Vec::new);
        }
        self.successors[node].push(next);
    }

    pub fn at(&self, node: usize) -> &[StateVec] {
        self.successors.get(node).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Row of the empirical kernel of one leaf, binned at the leaf's level.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalRow {
    pub source: Cell,
    pub bins: LevelGrid,
    pub probs: Vec<f64>,
    /// Number of lineage transitions behind the row.
    pub visits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalKernel {
    pub bounds: BoxBounds,
    pub rows: Vec<EmpiricalRow>,
}

/// Empirical kernel with one row per leaf of `tree` (in leaf order). Rows
/// without data are uniform over their bins.
pub fn empirical_kernel(log: &TransitionLog, tree: &PartitionTree) -> EmpiricalKernel {
    let bounds = tree.bounds().clone();
    let rows = tree
        .leaves()
        .into_iter()
        .map(|leaf| {
            let bins = LevelGrid::new(&bounds, leaf.cell.level);
            let mut counts = vec![0u64; bins.len()];
            let mut visits = 0u64;
            for node in tree.lineage(leaf.node) {
                for next in log.at(node) {
                    counts[bins.index_of(&cell_at_level(&bounds, leaf.cell.level, next))] += 1;
                    visits += 1;
                }
            }
            let probs = if visits == 0 {
                vec![1.0 / bins.len() as f64; bins.len()]
            } else {
                counts.iter().map(|&c| c as f64 / visits as f64).collect()
            };
            EmpiricalRow {
                source: leaf.cell,
                bins,
                probs,
                visits,
            }
        })
        .collect();
    EmpiricalKernel { bounds, rows }
}

/// Piecewise-constant continuous extension of an empirical kernel.
#[derive(Debug, Clone, Copy)]
pub struct ContinuousKernel<'a> {
    kernel: &'a EmpiricalKernel,
}

pub fn continuous_extension(kernel: &EmpiricalKernel) -> ContinuousKernel<'_> {
    ContinuousKernel { kernel }
}

fn overlap(a: &BoxBounds, b: &BoxBounds) -> f64 {
    a.sides()
        .iter()
        .zip(b.sides())
        .map(|(x, y)| (x.hi.min(y.hi) - x.lo.max(y.lo)).max(0.0))
        .product()
}

impl ContinuousKernel<'_> {
    pub fn rows(&self) -> usize {
        self.kernel.rows.len()
    }

    /// Mass that row `row` assigns to the box `region`.
    pub fn mass(&self, row: usize, region: &BoxBounds) -> f64 {
        let r = &self.kernel.rows[row];
        let bounds = &self.kernel.bounds;
        r.bins
            .cells()
            .zip(&r.probs)
            .filter(|(_, &p)| p > 0.0)
            .map(|(bin, &p)| {
                let cell = bin.region(bounds);
                overlap(&cell, region) / cell.volume() * p
            })
            .sum()
    }
}

/// Row-stochastic kernel from partition leaves to a uniform grid of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    pub sources: Vec<Cell>,
    pub dest: LevelGrid,
    /// Row-major `sources.len() × dest.len()`.
    pub probs: Vec<f64>,
}

impl DiscreteKernel {
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.dest.len();
        &self.probs[i * n..(i + 1) * n]
    }

    pub fn cols(&self) -> usize {
        self.dest.len()
    }
}

/// Re-bins the continuous extension onto the grid of level-`level` cells.
///
/// `level` must be at least every row's bin level, so each destination cell
/// sits inside exactly one source bin and receives its volume share.
pub fn rediscretize(p: &ContinuousKernel<'_>, level: u32) -> DiscreteKernel {
    let emp = p.kernel;
    let bounds = &emp.bounds;
    let dest = LevelGrid::new(bounds, level);
    let dest_cells: Vec<Cell> = dest.cells().collect();
    let dest_vol: Vec<f64> = dest_cells.iter().map(|c| c.volume(bounds)).collect();
    let mut probs = Vec::with_capacity(emp.rows.len() * dest.len());
    for row in &emp.rows {
        assert!(row.bins.level <= level, "destination grid coarser than a row");
        let bin_vol: Vec<f64> = row.bins.cells().map(|c| c.volume(bounds)).collect();
        for (cell, vol) in dest_cells.iter().zip(&dest_vol) {
            let bin = row.bins.index_of(&cell.ancestor(row.bins.level));
            let pb = row.probs[bin];
            probs.push(if pb == 0.0 { 0.0 } else { pb * (vol / bin_vol[bin]) });
        }
    }
    DiscreteKernel {
        sources: emp.rows.iter().map(|r| r.source).collect(),
        dest,
        probs,
    }
}

/// Constants entering the confidence radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusConstants {
    /// `c_d^b · log(T/δ)`.
    pub scale: f64,
    pub lip_policy: f64,
    pub lip_kernel: f64,
    /// Bound on the kernel density derivative.
    pub c_p: f64,
}

/// Per-row L1 radius, capped at 2 (the L1 diameter of the simplex).
pub fn confidence_radius(cell: &Cell, visits: u64, c: &RadiusConstants) -> f64 {
    let d = cell.dim() as f64;
    let stat = 3.0 * powf(c.scale / visits.max(1) as f64, 1.0 / (d + 2.0));
    let disc = (3.0 * (1.0 + c.lip_policy) * c.lip_kernel + c.c_p) * cell.diam();
    (stat + disc).min(2.0)
}

/// Set of discretized kernels within per-row L1 distance of the estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBall {
    pub center: DiscreteKernel,
    /// One radius per source leaf.
    pub radii: Vec<f64>,
    /// For each destination cell, the index of the leaf row containing it.
    pub dest_leaf: Vec<usize>,
}

impl ConfidenceBall {
    pub fn contains(&self, theta: &[f64]) -> bool {
        let n = self.center.cols();
        if theta.len() != self.center.probs.len() {
            return false;
        }
        (0..self.radii.len()).all(|i| {
            let row = &theta[i * n..(i + 1) * n];
            let sum: f64 = row.iter().sum();
            let l1: f64 = row.iter().zip(self.center.row(i)).map(|(a, b)| (a - b).abs()).sum();
            row.iter().all(|&x| x >= 0.0) && (sum - 1.0).abs() < 1e-9 && l1 <= self.radii[i] + 1e-12
        })
    }

    pub fn leaves(&self) -> usize {
        self.radii.len()
    }
}

pub fn build_ball(log: &TransitionLog, tree: &PartitionTree, consts: &RadiusConstants) -> ConfidenceBall {
    let emp = empirical_kernel(log, tree);
    let center = rediscretize(&continuous_extension(&emp), tree.level_max());
    let radii = emp
        .rows
        .iter()
        .map(|r| confidence_radius(&r.source, r.visits, consts))
        .collect();
    let bounds = tree.bounds();
    let leaf_index: Vec<(Cell, usize)> = emp.rows.iter().enumerate().map(|(i, r)| (r.source, i)).collect();
    let dest_leaf = center
        .dest
        .cells()
        .map(|c| {
            let rep = c.rep(bounds);
            let leaf = tree.cell(tree.locate_node(&rep));
            leaf_index
                .iter()
                .find(|(cell, _)| *cell == leaf)
                .map(|&(_, i)| i)
                .expect("every fine cell lies in a leaf")
        })
        .collect();
    ConfidenceBall {
        center,
        radii,
        dest_leaf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{Coords, Interval};
    use crate::partition::PartitionConstants;
    use crate::rng;
    use rand::Rng;

    fn tree(hi: f64, log_term: f64) -> PartitionTree {
        PartitionTree::new(
            &BoxBounds::new(vec![Interval::new(0.0, hi)]),
            PartitionConstants { c_b: 1.0, log_term },
        )
        .unwrap()
    }

    fn visit(t: &mut PartitionTree, log: &mut TransitionLog, s: f64, next: f64) {
        let (node, _) = t.record_visit(&Coords::scalar(s)).unwrap();
        log.record(node, Coords::scalar(next));
    }

    #[test]
    fn counting_and_uniform_prior() {
        let mut t = tree(6.0, 100.0);
        let mut log = TransitionLog::new();
        visit(&mut t, &mut log, 0.5, 2.5);
        visit(&mut t, &mut log, 0.2, 2.7);
        visit(&mut t, &mut log, 0.9, 4.1);
        let k = empirical_kernel(&log, &t);
        assert_eq!(k.rows.len(), 6);
        assert_eq!(k.rows[0].visits, 3);
        assert!((k.rows[0].probs[2] - 2.0 / 3.0).abs() < 1e-15);
        assert!((k.rows[0].probs[4] - 1.0 / 3.0).abs() < 1e-15);
        for p in &k.rows[1].probs {
            assert_eq!(*p, 1.0 / 6.0);
        }
        let mut t = tree(6.0, 100.0);
        let mut log = TransitionLog::new();
        for _ in 0..5 {
            visit(&mut t, &mut log, 3.3, 5.5);
        }
        let k = empirical_kernel(&log, &t);
        assert_eq!(k.rows[3].probs[5], 1.0);
        assert_eq!(k.rows[3].probs.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn continuous_extension_masses() {
        let mut t = tree(6.0, 100.0);
        let mut log = TransitionLog::new();
        visit(&mut t, &mut log, 0.5, 2.5);
        visit(&mut t, &mut log, 0.5, 1.5);
        let k = empirical_kernel(&log, &t);
        let p = continuous_extension(&k);
        let all = BoxBounds::new(vec![Interval::new(0.0, 6.0)]);
        assert!((p.mass(0, &all) - 1.0).abs() < 1e-15);
        let cell = BoxBounds::new(vec![Interval::new(2.0, 3.0)]);
        assert_eq!(p.mass(0, &cell), 0.5);
        let half = BoxBounds::new(vec![Interval::new(2.0, 2.5)]);
        assert_eq!(p.mass(0, &half), 0.25);
    }

    #[test]
    fn rediscretize_splits_mass_and_is_idempotent() {
        let mut t = tree(6.0, 100.0);
        let mut log = TransitionLog::new();
        for next in [2.5, 2.5, 0.1, 0.2, 5.0] {
            visit(&mut t, &mut log, 0.5, next);
        }
        let k = empirical_kernel(&log, &t);
        let same = rediscretize(&continuous_extension(&k), 0);
        for (i, row) in k.rows.iter().enumerate() {
            assert_eq!(same.row(i), row.probs.as_slice());
        }
        let fine = rediscretize(&continuous_extension(&k), 1);
        assert_eq!(fine.cols(), 12);
        // coarse mass 0.4 on [2, 3) becomes 0.2 + 0.2
        assert!((fine.row(0)[4] - 0.2).abs() < 1e-15);
        assert!((fine.row(0)[5] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn random_kernels_stay_stochastic() {
        let mut rng = rng::stream(51, "kernel");
        for _ in 0..100 {
            let mut t = tree(6.0, 0.5);
            let mut log = TransitionLog::new();
            let n = rng.random_range(0..400);
            for _ in 0..n {
                let s = rng.random_range(0.0..=6.0);
                let next = rng.random_range(0.0..=6.0);
                visit(&mut t, &mut log, s, next);
            }
            let k = empirical_kernel(&log, &t);
            for row in &k.rows {
                assert!((row.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            let d = rediscretize(&continuous_extension(&k), t.level_max());
            for i in 0..d.sources.len() {
                let row = d.row(i);
                assert!(row.iter().all(|&x| x >= 0.0));
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    fn rc(scale: f64, lip_policy: f64, lip_kernel: f64) -> RadiusConstants {
        RadiusConstants {
            scale,
            lip_policy,
            lip_kernel,
            c_p: 0.0,
        }
    }

    #[test]
    fn radius_examples() {
        let c = rc(1.0, 1.0, 1.0);
        let quarter = Cell::new(2, &[0]);
        assert_eq!(confidence_radius(&quarter, 8, &c), 2.0);
        let tiny = Cell::new(30, &[0]);
        assert!(confidence_radius(&tiny, 1 << 40, &c) < 1e-3);
        // at the activation floor N_min the statistical term is 3·diam
        let c = rc(5.0, 1.0, 0.1);
        let cell = Cell::new(3, &[0]);
        let n_min = 5.0 / powf(cell.diam(), 3.0);
        let eta = confidence_radius(&cell, n_min.round() as u64, &c);
        let c_eta = 3.0 * (1.0 + 2.0 * 0.1);
        assert!((eta - c_eta * cell.diam()).abs() < 1e-9, "{eta}");
    }

    #[test]
    fn radius_monotonicity() {
        let c = rc(3.0, 0.5, 1.0);
        for level in 0..6 {
            let cell = Cell::new(level, &[0]);
            let coarser = Cell::new(level.saturating_sub(1), &[0]);
            let mut prev = f64::INFINITY;
            for n in [1u64, 2, 5, 10, 100, 1000, 100000] {
                let eta = confidence_radius(&cell, n, &c);
                assert!(eta <= prev);
                assert!(confidence_radius(&coarser, n, &c) >= eta);
                prev = eta;
            }
        }
    }

    #[test]
    fn fresh_ball_is_uniform_and_maximal() {
        let t = tree(6.0, 10.0);
        let ball = build_ball(&TransitionLog::new(), &t, &rc(10.0, 0.5, 1.0));
        assert!(ball.radii.iter().all(|&r| r == 2.0));
        for i in 0..ball.leaves() {
            assert!(ball.center.row(i).iter().all(|&p| p == 1.0 / 6.0));
        }
        assert!(ball.contains(&ball.center.probs));
        assert_eq!(ball.dest_leaf, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn deterministic_walk_concentrates() {
        // s' = s/2 + 1/4 on [0, 1]
        let consts = PartitionConstants {
            c_b: 1.0,
            log_term: 2.0,
        };
        let mut t = PartitionTree::new(&BoxBounds::new(vec![Interval::new(0.0, 1.0)]), consts).unwrap();
        let mut log = TransitionLog::new();
        let mut rng = rng::stream(52, "walk");
        for _ in 0..20_000 {
            let s: f64 = rng.random();
            let (node, _) = t.record_visit(&Coords::scalar(s)).unwrap();
            log.record(node, Coords::scalar(s / 2.0 + 0.25));
        }
        let rcst = rc(2.0, 0.0, 1.0);
        let ball = build_ball(&log, &t, &rcst);
        let grid = &ball.center.dest;
        let mut prev_radius = 3.0;
        for (i, cell) in ball.center.sources.iter().enumerate() {
            let region = cell.region(t.bounds());
            let (a, b) = (region.sides()[0].lo / 2.0 + 0.25, region.sides()[0].hi / 2.0 + 0.25);
            // true successor law from a uniform source in the cell: uniform on [a, b]
            let truth: Vec<f64> = grid
                .cells()
                .map(|c| {
                    let r = c.region(t.bounds()).sides()[0];
                    (r.hi.min(b) - r.lo.max(a)).max(0.0) / (b - a)
                })
                .collect();
            let l1: f64 = truth.iter().zip(ball.center.row(i)).map(|(x, y)| (x - y).abs()).sum();
            assert!(l1 < ball.radii[i], "row {i}: l1 {l1} radius {}", ball.radii[i]);
            prev_radius = f64::min(prev_radius, ball.radii[i]);
        }
        assert!(prev_radius < 2.0);
    }
}
