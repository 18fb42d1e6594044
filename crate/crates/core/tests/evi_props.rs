use policy_zoom_core::evi::{approx_diameter, evi_gain, inner_max, EviOptions, ExtendedChain};
use policy_zoom_core::kernel::{build_ball, RadiusConstants, TransitionLog};
use policy_zoom_core::math::{BoxBounds, Coords, Interval};
use policy_zoom_core::partition::{PartitionConstants, PartitionTree};
use proptest::prelude::*;

fn simplex(raw: &[f64]) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

/// Exhaustive search over a lattice of step `h` anchored at the center
/// (plus the zero level of every coordinate). The highest-value coordinate
/// absorbs the mass balance; the last remaining coordinate is resolved by
/// its extreme feasible lattice point, which is exact for a linear objective.
fn lattice_inner_max(values: &[f64], center: &[f64], eta: f64, h: f64) -> f64 {
    let n = values.len();
    let f = (0..n).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let others: Vec<usize> = (0..n).filter(|&i| i != f).collect();
    let Some((&g, free)) = others.split_last() else {
        return values[f];
    };
    let mut best = f64::NEG_INFINITY;
    search(values, center, eta, h, f, g, free, 0.0, 0.0, 0.0, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn search(
    v: &[f64],
    c: &[f64],
    eta: f64,
    h: f64,
    f: usize,
    g: usize,
    free: &[usize],
    l1: f64,
    mass: f64,
    value: f64,
    best: &mut f64,
) {
    if let Some((&i, rest)) = free.split_first() {
        let mut try_level = |x: f64| {
            let l = l1 + (x - c[i]).abs();
            if x >= 0.0 && x <= 1.0 && l <= eta + 1e-12 && mass + x <= 1.0 + 1e-12 {
                search(v, c, eta, h, f, g, rest, l, mass + x, value + v[i] * x, best);
            }
        };
        try_level(0.0);
        let lo = (-c[i].min(eta) / h).ceil() as i64;
        let hi = ((1.0 - c[i]).min(eta) / h).floor() as i64;
        for j in lo..=hi {
            try_level(c[i] + j as f64 * h);
        }
        return;
    }
    let r = 1.0 - mass;
    let budget = eta - l1;
    let ok = |x: f64| x >= 0.0 && x <= r + 1e-15 && (x - c[g]).abs() + (r - x - c[f]).abs() <= budget + 1e-12;
    let score = |x: f64| value + v[g] * x + v[f] * (r - x);
    // v[f] ≥ v[g]: the smallest feasible level of g is optimal
    if ok(0.0) {
        *best = best.max(score(0.0));
        return;
    }
    let j_lo = (-c[g] / h).ceil() as i64;
    let j_hi = ((r - c[g]) / h).floor() as i64;
    if j_lo > j_hi {
        return;
    }
    let kink = ((r - c[f] - c[g]) / h).floor() as i64;
    let Some(mut good) = [0, kink, kink + 1, j_lo, j_hi]
        .into_iter()
        .map(|j| j.clamp(j_lo, j_hi))
        .find(|&j| ok(c[g] + j as f64 * h))
    else {
        return;
    };
    let mut bad = j_lo - 1;
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if ok(c[g] + mid as f64 * h) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    *best = best.max(score(c[g] + good as f64 * h));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_max_feasible_and_not_beaten_by_grid(
        raw in prop::collection::vec(0.01f64..1.0, 2..=3),
        values in prop::collection::vec(0.0f64..1.0, 3),
        eta in 0.0f64..2.0,
    ) {
        let center = simplex(&raw);
        let values = &values[..center.len()];
        let (theta, value) = inner_max(values, &center, eta).unwrap();
        let l1: f64 = theta.iter().zip(&center).map(|(a, b)| (a - b).abs()).sum();
        prop_assert!(l1 <= eta + 1e-12);
        prop_assert!(theta.iter().all(|&x| x >= 0.0));
        prop_assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let grid = lattice_inner_max(values, &center, eta, 1e-3);
        prop_assert!(value >= grid - 1e-9, "{value} < {grid}");
        prop_assert!(value <= grid + 2e-3, "{value} vs {grid}");
    }

    #[test]
    fn gain_bounded_by_reward_range(
        raw in prop::collection::vec(0.01f64..1.0, 9),
        rewards in prop::collection::vec(0.0f64..1.0, 3),
        radii in prop::collection::vec(0.0f64..2.0, 3),
    ) {
        let rows: Vec<f64> = raw.chunks(3).flat_map(simplex).collect();
        let chain = ExtendedChain::new(3, rows, radii, vec![0, 1, 2]).unwrap();
        let r = chain.gain(&rewards, &EviOptions::for_states(3, 0.5)).unwrap();
        let max = rewards.iter().copied().fold(0.0, f64::max);
        prop_assert!(r.gain >= -1e-6 && r.gain <= max + 1e-6);
        prop_assert!(r.final_span_delta <= 1e-6);
    }
}

#[test]
fn gain_nondecreasing_in_radius() {
    let mut rng = policy_zoom_core::rng::stream(3, "evi-mono");
    use rand::Rng;
    for _ in 0..100 {
        let n = rng.random_range(2..6);
        let rows: Vec<f64> = (0..n)
            .flat_map(|_| simplex(&(0..n).map(|_| rng.random_range(0.01..1.0)).collect::<Vec<_>>()))
            .collect();
        let rewards: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let base: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let opts = EviOptions::for_states(n, 0.5);
        let mut last = f64::NEG_INFINITY;
        for scale in [0.0, 0.25, 0.5, 1.0, 2.0] {
            let radii = base.iter().map(|r| r * scale).collect();
            let chain = ExtendedChain::new(n, rows.clone(), radii, (0..n).collect()).unwrap();
            let g = chain.gain(&rewards, &opts).unwrap().gain;
            assert!(g >= last - 2e-6, "{g} < {last}");
            last = g;
        }
    }
}

fn tree_with_data(n: usize) -> (PartitionTree, TransitionLog) {
    let consts = PartitionConstants { c_b: 1.0, log_term: 1.0 };
    let mut tree = PartitionTree::new(&BoxBounds::new(vec![Interval::new(0.0, 2.0)]), consts).unwrap();
    let mut log = TransitionLog::new();
    let mut rng = policy_zoom_core::rng::stream(8, "diam");
    use rand::Rng;
    for _ in 0..n {
        let s: f64 = rng.random_range(0.0..=2.0);
        let next = (s * 0.5 + rng.random_range(0.0..1.0)).min(2.0);
        let (node, _) = tree.record_visit(&Coords::scalar(s)).unwrap();
        log.record(node, Coords::scalar(next));
    }
    (tree, log)
}

#[test]
fn diameter_scales_linearly_with_cell_sizes() {
    let (tree, log) = tree_with_data(500);
    let radius = RadiusConstants { scale: 1.0, lip_policy: 0.0, lip_kernel: 1.0, c_p: 0.0 };
    let ball = build_ball(&log, &tree, &radius);
    let diams: Vec<f64> = ball.center.sources.iter().map(|c| c.diam()).collect();
    let opts = EviOptions { tol: 1e-10, max_iter: 100_000 };
    let full = approx_diameter(&ball, &diams, 7.0, &opts).unwrap();
    assert_eq!(full.value, full.raw.gain / 7.0);
    let halved: Vec<f64> = diams.iter().map(|d| d / 2.0).collect();
    let half = approx_diameter(&ball, &halved, 7.0, &opts).unwrap();
    assert!((half.value - full.value / 2.0).abs() < 1e-8);
    let uniform = vec![0.3; diams.len()];
    let u = approx_diameter(&ball, &uniform, 7.0, &opts).unwrap();
    assert!((u.raw.gain - 0.3).abs() < 1e-9);
    assert!((u.value - 0.3 / 7.0).abs() < 1e-9);
}

#[test]
fn constant_rewards_give_constant_gain_on_balls() {
    let (tree, log) = tree_with_data(300);
    let radius = RadiusConstants { scale: 1.0, lip_policy: 0.0, lip_kernel: 1.0, c_p: 0.0 };
    let ball = build_ball(&log, &tree, &radius);
    let r = vec![0.5; ball.center.cols()];
    let g = evi_gain(&ball, &r, &EviOptions::for_states(r.len(), 0.5)).unwrap();
    assert!((g.gain - 0.5).abs() < 1e-9);
}
