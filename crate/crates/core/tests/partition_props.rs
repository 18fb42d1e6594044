use policy_zoom_core::math::{BoxBounds, Coords, Interval};
use policy_zoom_core::partition::{PartitionConstants, PartitionTree};
use proptest::prelude::*;

fn consts() -> PartitionConstants {
    PartitionConstants { c_b: 1.0, log_term: 0.5 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn leaves_tile_the_box_and_respect_thresholds(
        points in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..2000),
        width in 0.5f64..3.0,
    ) {
        let bounds = BoxBounds::new(vec![Interval::new(0.0, width), Interval::new(-1.0, 0.0)]);
        let mut tree = PartitionTree::new(&bounds, consts()).unwrap();
        for &(x, y) in &points {
            let s = Coords::new(&[x * width, y - 1.0]);
            let before = tree.locate(&s).unwrap();
            let (node, split) = tree.record_visit(&s).unwrap();
            prop_assert_eq!(node, before.node);
            let (_, n_max) = tree.thresholds(&before.cell);
            // a split happens exactly when the count reaches N_max
            prop_assert_eq!(split.is_some(), (before.count + 1) as f64 >= n_max);
        }
        let leaves = tree.leaves();
        let vol: f64 = leaves.iter().map(|l| l.cell.region(&bounds).volume()).sum();
        prop_assert!((vol - width).abs() < 1e-9 * width);
        for l in &leaves {
            let (n_min, n_max) = tree.thresholds(&l.cell);
            prop_assert!(n_min <= l.count as f64 && (l.count as f64) < n_max);
            for m in &leaves {
                if l.node != m.node {
                    prop_assert!(!l.cell.is_ancestor_or_self(&m.cell));
                }
            }
        }
        for &(x, y) in points.iter().take(50) {
            let s = Coords::new(&[x * width, y - 1.0]);
            let leaf = tree.locate(&s).unwrap();
            prop_assert!(leaf.cell.region(&bounds).contains(&s));
        }
        prop_assert_eq!(tree.conserved_visits(), points.len() as u64);
    }
}
