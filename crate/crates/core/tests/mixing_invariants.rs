use minilp::{ComparisonOp, OptimizationDirection, Problem};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use mixrate::mixing::{cluster_tree, default_scales, diff, tree_wasserstein_estimate, wasserstein, witness_lower_bound};
use mixrate::{Mixing, Mixing32};

fn fixed(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(12),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn lp_transport(g1: &Mixing, g2: &Mixing) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = g1
        .atoms()
        .map(|(a, _)| g2.atoms().map(|(b, _)| lp.add_var((a - b).abs(), (0.0, f64::INFINITY))).collect())
        .collect();
    for (row, (_, w)) in vars.iter().zip(g1.atoms()) {
        let terms: Vec<_> = row.iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(&terms, ComparisonOp::Eq, w);
    }
    for (j, (_, w)) in g2.atoms().enumerate().take(g2.order() - 1) {
        let terms: Vec<_> = vars.iter().map(|row| (row[j], 1.0)).collect();
        lp.add_constraint(&terms, ComparisonOp::Eq, w);
    }
    lp.solve().unwrap().objective()
}

fn mixing_strategy(max_atoms: usize, span: f64) -> impl Strategy<Value = Mixing> {
    prop::collection::vec((-span..span, 0.05f64..1.0), 1..=max_atoms)
        .prop_map(|atoms| Mixing::from_unnormalized(atoms).unwrap())
}

fn pair31() -> (Mixing, Mixing) {
    (
        Mixing::new([(-2.0, 0.5), (2.0, 0.5)]).unwrap(),
        Mixing::new([(-1.0, 0.8), (4.0, 0.2)]).unwrap(),
    )
}

#[test]
fn worked_pair_distance_matches_lp() {
    let (g1, g2) = pair31();
    assert!((wasserstein(&g1, &g2) - 1.8).abs() < 1e-15);
    assert!((lp_transport(&g1, &g2) - 1.8).abs() < 1e-9);
    assert!((wasserstein(&Mixing::dirac(-0.25), &Mixing::dirac(3.0)) - 3.25).abs() < 1e-15);
}

#[test]
fn worked_pair_difference_and_tree() {
    let (g1, g2) = pair31();
    let delta = diff(&g1, &g2);
    assert_eq!(delta.locations(), &[-2.0, -1.0, 2.0, 4.0]);
    assert_eq!(delta.weights(), &[0.5, -0.8, 0.5, -0.2]);
    assert!(delta.total_mass().abs() < 1e-12);
    let tree = cluster_tree(&delta, &default_scales(&delta)).unwrap();
    let est = tree_wasserstein_estimate(&delta, &tree);
    assert!(est > 0.0 && est <= 1.8 + 1e-12, "{est}");
}

#[test]
fn single_precision_distance() {
    let a = Mixing32::new([(-2.0f32, 0.5), (2.0, 0.5)]).unwrap();
    let b = Mixing32::new([(-1.0f32, 0.8), (4.0, 0.2)]).unwrap();
    assert!((wasserstein(&a, &b) - 1.8).abs() < 1e-6);
}

proptest! {
    #![proptest_config(fixed(200))]

    #[test]
    fn distance_equals_transport_lp(g1 in mixing_strategy(6, 5.0), g2 in mixing_strategy(6, 5.0)) {
        let w = wasserstein(&g1, &g2);
        prop_assert!((w - lp_transport(&g1, &g2)).abs() <= 1e-10);
        prop_assert_eq!(w, wasserstein(&g2, &g1));
        prop_assert!(w >= 0.0);
    }

    #[test]
    fn triangle_inequality(a in mixing_strategy(6, 5.0), b in mixing_strategy(6, 5.0), c in mixing_strategy(6, 5.0)) {
        prop_assert!(wasserstein(&a, &c) <= wasserstein(&a, &b) + wasserstein(&b, &c) + 1e-10);
    }

    #[test]
    fn homothety(
        a in mixing_strategy(6, 5.0),
        b in mixing_strategy(6, 5.0),
        center in -3.0f64..3.0,
        factor in 0.01f64..10.0,
    ) {
        let w = wasserstein(&a, &b);
        let scaled = wasserstein(&a.homothety(center, factor).unwrap(), &b.homothety(center, factor).unwrap());
        prop_assert!((scaled - factor * w).abs() <= 1e-12, "{} vs {}", scaled, factor * w);
    }

    #[test]
    fn witnesses_never_exceed_the_distance(a in mixing_strategy(3, 5.0), b in mixing_strategy(3, 5.0)) {
        let delta = diff(&a, &b);
        let m = delta.len();
        prop_assume!((2..=6).contains(&m));
        let w = wasserstein(&a, &b);
        for mask in 1..(1u32 << m) - 1 {
            let members: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            let lb = witness_lower_bound(&delta, &members).unwrap();
            prop_assert!(lb <= w + 1e-10, "{lb} > {w} for {members:?}");
        }
        let tree = cluster_tree(&delta, &default_scales(&delta)).unwrap();
        prop_assert!(tree_wasserstein_estimate(&delta, &tree) <= w + 1e-10);
    }

    #[test]
    fn tree_children_partition_members(a in mixing_strategy(4, 5.0), b in mixing_strategy(4, 5.0)) {
        let delta = diff(&a, &b);
        prop_assume!(!delta.is_empty());
        let tree = cluster_tree(&delta, &default_scales(&delta)).unwrap();
        for node in &tree.nodes {
            if node.children.is_empty() {
                continue;
            }
            let mut union: Vec<usize> = node.children.iter().flat_map(|&c| tree.nodes[c].members.clone()).collect();
            union.sort_unstable();
            prop_assert_eq!(&union, &node.members);
            for &c in &node.children {
                prop_assert!(tree.nodes[c].diameter <= node.diameter);
            }
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact(g in mixing_strategy(6, 10.0)) {
        let text = serde_json::to_string(&g).unwrap();
        let back: Mixing = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, g);
    }
}
