//! Per-policy adaptive dyadic partition of the state space.
//!
//! Cells are dyadic cubes of side `2^-ℓ` intersected with the state box. A
//! leaf is split into its `2^d` children once its visit count reaches
//! `N_max`; children inherit the parent's count, so visits to an ancestor
//! count towards every descendant.

use alloc::vec;
use alloc::vec::Vec;

use crate::env::StateVec;
use crate::math::{ceil, exp2i, floor, powi, sqrt, BoxBounds, Interval};
use crate::{Error, Result, MAX_DIM};

/// Cells are never refined past this level.
pub const MAX_LEVEL: u32 = 40;

/// Constants of the cell activation rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionConstants {
    /// `c_d^b`.
    pub c_b: f64,
    /// `log(T/δ)`.
    pub log_term: f64,
}

impl PartitionConstants {
    pub fn new(c_b: f64, horizon: u64, delta: f64) -> Self {
        Self {
            c_b,
            log_term: crate::math::ln(horizon.max(1) as f64 / delta),
        }
    }

    pub fn scale(&self) -> f64 {
        self.c_b * self.log_term
    }
}

/// A dyadic cube of side `2^-level` with lower corner `anchor · 2^-level`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub level: u32,
    anchor: [i64; MAX_DIM],
    dim: u8,
}

impl core::fmt::Debug for Cell {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Cell(l={}, {:?})", self.level, self.anchor())
    }
}

impl Cell {
    pub fn new(level: u32, anchor: &[i64]) -> Self {
        let mut a = [0; MAX_DIM];
        a[..anchor.len()].copy_from_slice(anchor);
        Self {
            level,
            anchor: a,
            dim: anchor.len() as u8,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn anchor(&self) -> &[i64] {
        &self.anchor[..self.dim()]
    }

    pub fn side(&self) -> f64 {
        exp2i(-(self.level as i32))
    }

    /// Euclidean diameter of the full cube, `√d · 2^-ℓ`.
    pub fn diam(&self) -> f64 {
        sqrt(self.dim() as f64) * self.side()
    }

    /// The cube intersected with `bounds`.
    pub fn region(&self, bounds: &BoxBounds) -> BoxBounds {
        let side = self.side();
        BoxBounds::new(
            bounds
                .sides()
                .iter()
                .zip(self.anchor())
                .map(|(b, &a)| {
                    let lo = a as f64 * side;
                    Interval::new(lo.max(b.lo), (lo + side).min(b.hi))
                })
                .collect(),
        )
    }

    /// Representative point: center of the cell's part of the state box.
    pub fn rep(&self, bounds: &BoxBounds) -> StateVec {
        self.region(bounds).center()
    }

    pub fn volume(&self, bounds: &BoxBounds) -> f64 {
        self.region(bounds).volume()
    }

    /// Ancestor of this cell at a coarser `level`.
    pub fn ancestor(&self, level: u32) -> Cell {
        debug_assert!(level <= self.level);
        let shift = self.level - level;
        let mut a = self.anchor;
        for v in a.iter_mut().take(self.dim()) {
            *v >>= shift;
        }
        Cell {
            level,
            anchor: a,
            dim: self.dim,
        }
    }

    pub fn is_ancestor_or_self(&self, other: &Cell) -> bool {
        self.level <= other.level && other.ancestor(self.level) == *self
    }
}

/// Lattice range of level-`level` cells meeting a box with positive volume
/// (or the single cell containing a degenerate side).
fn anchor_range(side: &Interval, level: u32) -> (i64, i64) {
    let w = exp2i(-(level as i32));
    let first = floor(side.lo / w) as i64;
    let last = if side.hi > side.lo {
        ceil(side.hi / w) as i64 - 1
    } else {
        first
    };
    (first, last.max(first))
}

/// Level-`level` cell containing `s`; points on an interior dyadic boundary
/// belong to the upper cell and the upper face of the box to the last cell.
pub fn cell_at_level(bounds: &BoxBounds, level: u32, s: &StateVec) -> Cell {
    let w = exp2i(-(level as i32));
    let mut a = [0i64; MAX_DIM];
    for (k, side) in bounds.sides().iter().enumerate() {
        let (first, last) = anchor_range(side, level);
        a[k] = (floor(s[k] / w) as i64).clamp(first, last);
    }
    Cell {
        level,
        anchor: a,
        dim: bounds.dim() as u8,
    }
}

/// Dense lexicographic indexing of all level-`level` cells tiling a box.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelGrid {
    pub level: u32,
    first: [i64; MAX_DIM],
    counts: [usize; MAX_DIM],
    dim: usize,
    len: usize,
}

impl LevelGrid {
    pub fn new(bounds: &BoxBounds, level: u32) -> Self {
        let mut first = [0; MAX_DIM];
        let mut counts = [1; MAX_DIM];
        for (k, side) in bounds.sides().iter().enumerate() {
            let (f, l) = anchor_range(side, level);
            first[k] = f;
            counts[k] = (l - f + 1) as usize;
        }
        let dim = bounds.dim();
        let len = counts[..dim].iter().product();
        Self {
            level,
            first,
            counts,
            dim,
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn index_of(&self, cell: &Cell) -> usize {
        debug_assert_eq!(cell.level, self.level);
        let mut idx = 0;
        for k in 0..self.dim {
            let off = (cell.anchor[k] - self.first[k]) as usize;
            debug_assert!(off < self.counts[k]);
            idx = idx * self.counts[k] + off;
        }
        idx
    }

    pub fn cell(&self, mut index: usize) -> Cell {
        let mut a = [0i64; MAX_DIM];
        for k in (0..self.dim).rev() {
            a[k] = self.first[k] + (index % self.counts[k]) as i64;
            index /= self.counts[k];
        }
        Cell {
            level: self.level,
            anchor: a,
            dim: self.dim as u8,
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len).map(|i| self.cell(i))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    cell: Cell,
    count: u64,
    inherited: u64,
    children: Vec<usize>,
}

/// Emitted when a leaf is replaced by its children.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitEvent {
    pub parent: Cell,
    pub children: Vec<Cell>,
}

/// A leaf of the partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leaf {
    pub node: usize,
    pub cell: Cell,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTree {
    bounds: BoxBounds,
    consts: PartitionConstants,
    root_level: u32,
    roots: LevelGrid,
    nodes: Vec<Node>,
    level_max: u32,
    total_visits: u64,
}

impl PartitionTree {
    /// Cells of the smallest level whose diameter is at most 1.
    pub fn new(bounds: &BoxBounds, consts: PartitionConstants) -> Result<Self> {
        if bounds.dim() == 0 || !bounds.is_nonempty() {
            return Err(Error::config("adaptive partition requires a bounded, nonempty state box"));
        }
        let d = bounds.dim() as f64;
        let mut root_level = 0;
        while sqrt(d) * exp2i(-(root_level as i32)) > 1.0 {
            root_level += 1;
        }
        let roots = LevelGrid::new(bounds, root_level);
        let nodes = roots
            .cells()
            .map(|cell| Node {
                cell,
                count: 0,
                inherited: 0,
                children: Vec::new(),
            })
            .collect();
        Ok(Self {
            bounds: bounds.clone(),
            consts,
            root_level,
            roots,
            nodes,
            level_max: root_level,
            total_visits: 0,
        })
    }

    pub fn bounds(&self) -> &BoxBounds {
        &self.bounds
    }

    pub fn constants(&self) -> &PartitionConstants {
        &self.consts
    }

    pub fn root_level(&self) -> u32 {
        self.root_level
    }

    /// Level of the smallest active cell.
    pub fn level_max(&self) -> u32 {
        self.level_max
    }

    pub fn total_visits(&self) -> u64 {
        self.total_visits
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// `(N_min, N_max)` of a cell.
    pub fn thresholds(&self, cell: &Cell) -> (f64, f64) {
        thresholds(cell, self.root_level, &self.consts)
    }

    fn leaf_node(&self, s: &StateVec) -> usize {
        let root = cell_at_level(&self.bounds, self.root_level, s);
        let mut node = self.roots.index_of(&root);
        while !self.nodes[node].children.is_empty() {
            let level = self.nodes[node].cell.level + 1;
            let target = cell_at_level(&self.bounds, level, s);
            node = *self.nodes[node]
                .children
                .iter()
                .find(|&&c| self.nodes[c].cell == target)
                .expect("children tile their parent");
        }
        node
    }

    /// The active cell containing `s`.
    pub fn locate(&self, s: &StateVec) -> Result<Leaf> {
        if !self.bounds.contains(s) {
            return Err(Error::usage(alloc::format!("state {s:?} lies outside the state box")));
        }
        let node = self.leaf_node(s);
        Ok(self.leaf(node))
    }

    fn leaf(&self, node: usize) -> Leaf {
        let n = &self.nodes[node];
        Leaf {
            node,
            cell: n.cell,
            count: n.count,
        }
    }

    /// Node id of the active cell containing `s`; `s` must lie in the box.
    pub fn locate_node(&self, s: &StateVec) -> usize {
        self.leaf_node(s)
    }

    /// Counts a visit to `s` and refines the visited leaf if it reached
    /// `N_max`. Returns the id of the leaf that was visited (before any split).
    pub fn record_visit(&mut self, s: &StateVec) -> Result<(usize, Option<SplitEvent>)> {
        if !self.bounds.contains(s) {
            return Err(Error::usage(alloc::format!("state {s:?} lies outside the state box")));
        }
        let node = self.leaf_node(s);
        self.nodes[node].count += 1;
        self.total_visits += 1;
        let (_, n_max) = self.thresholds(&self.nodes[node].cell);
        let split = if self.nodes[node].count as f64 >= n_max && self.nodes[node].cell.level < MAX_LEVEL {
            let parent = self.nodes[node].cell;
            let mut children = Vec::new();
            self.split(node, &mut children);
            Some(SplitEvent { parent, children })
        } else {
            None
        };
        Ok((node, split))
    }

    fn split(&mut self, node: usize, created: &mut Vec<Cell>) {
        let parent = self.nodes[node].cell;
        let count = self.nodes[node].count;
        let d = parent.dim();
        let level = parent.level + 1;
        let mut ids = Vec::with_capacity(1 << d);
        for mask in 0..(1usize << d) {
            let mut anchor = [0i64; MAX_DIM];
            for k in 0..d {
                anchor[k] = 2 * parent.anchor[k] + ((mask >> (d - 1 - k)) & 1) as i64;
            }
            let cell = Cell {
                level,
                anchor,
                dim: d as u8,
            };
            let region = cell.region(&self.bounds);
            let meets_box = region.sides().iter().all(|s| s.hi > s.lo || (s.hi == s.lo && self.is_degenerate()));
            if !meets_box {
                continue;
            }
            ids.push(self.nodes.len());
            self.nodes.push(Node {
                cell,
                count,
                inherited: count,
                children: Vec::new(),
            });
            created.push(cell);
        }
        self.nodes[node].children = ids.clone();
        self.level_max = self.level_max.max(level);
        for id in ids {
            let (_, n_max) = self.thresholds(&self.nodes[id].cell);
            if self.nodes[id].count as f64 >= n_max && level < MAX_LEVEL {
                self.split(id, created);
            }
        }
    }

    fn is_degenerate(&self) -> bool {
        self.bounds.sides().iter().any(|s| s.hi == s.lo)
    }

    /// Active cells in depth-first lexicographic order.
    pub fn leaves(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        let mut stack: Vec<usize> = (0..self.roots.len()).rev().collect();
        while let Some(n) = stack.pop() {
            if self.nodes[n].children.is_empty() {
                out.push(self.leaf(n));
            } else {
                stack.extend(self.nodes[n].children.iter().rev());
            }
        }
        out
    }

    pub fn cell(&self, node: usize) -> Cell {
        self.nodes[node].cell
    }

    /// Node ids from the root down to `node`.
    pub fn lineage(&self, node: usize) -> Vec<usize> {
        // walk down from the root towards the node's cell
        let target = self.nodes[node].cell;
        let root_cell = target.ancestor(self.root_level);
        let mut cur = self.roots.index_of(&root_cell);
        let mut path = vec![cur];
        while cur != node {
            let next_level = self.nodes[cur].cell.level + 1;
            let want = target.ancestor(next_level);
            cur = *self.nodes[cur]
                .children
                .iter()
                .find(|&&c| self.nodes[c].cell == want)
                .expect("node is a descendant");
            path.push(cur);
        }
        path
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Representatives of all level-`ℓ_max` cells tiling the box.
    pub fn min_level_grid(&self) -> Vec<StateVec> {
        LevelGrid::new(&self.bounds, self.level_max)
            .cells()
            .map(|c| c.rep(&self.bounds))
            .collect()
    }

    /// Visits recorded since creation, reconstructed from node counts:
    /// `Σ (count - inherited)` over every node ever created.
    pub fn conserved_visits(&self) -> u64 {
        self.nodes.iter().map(|n| n.count - n.inherited).sum()
    }
}

/// `(N_min, N_max)` of a cell under the activation rule. Cells at the
/// partition's initial level have `N_min = 0`.
pub fn thresholds(cell: &Cell, root_level: u32, consts: &PartitionConstants) -> (f64, f64) {
    let d = cell.dim() as i32;
    let denom = powi(cell.diam(), d + 2);
    let n_max = consts.scale() * exp2i(d + 2) / denom;
    let n_min = if cell.level <= root_level {
        0.0
    } else {
        consts.scale() / denom
    };
    (n_min, n_max)
}
