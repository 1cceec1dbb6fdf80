//! Property-based invariants over randomized geometric inputs.

use proptest::prelude::*;

use mobius_core::group::{random_group_element, GroupElement, ParabolicElement};
use mobius_core::mat::{vecn, Mat};
use mobius_core::rng::SplitMix64;
use mobius_core::sphere::{
    act, chart, chart_inv, hausdorff, round_distance, s_plus, SampledSet, SpherePoint,
};

fn chart_point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-8.0f64..8.0, n)
}

fn nonzero_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.0f64..4.0, n)
        .prop_filter("nonzero", |v| vecn::norm(v) > 1e-3)
}

fn unit_point(n: usize) -> impl Strategy<Value = SpherePoint> {
    nonzero_vec(n + 1).prop_map(|v| SpherePoint::from_unnormalized(&v).unwrap())
}

fn small_set(n: usize) -> impl Strategy<Value = SampledSet> {
    prop::collection::vec(unit_point(n), 1..12)
        .prop_map(|pts| SampledSet::new(pts, 0.1).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chart_roundtrip_is_identity(x in chart_point(3)) {
        let back = chart(&chart_inv(&x)).unwrap();
        prop_assert!(vecn::dist(&x, &back) < 1e-10);
    }

    #[test]
    fn s_plus_is_an_involution(u in nonzero_vec(3)) {
        let once = s_plus(&u).unwrap();
        let twice = s_plus(&once).unwrap();
        prop_assert!(vecn::dist(&twice, &u) < 1e-9 * (1.0 + vecn::norm(&u)));
        prop_assert!((vecn::norm(&once) * vecn::norm(&u) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hausdorff_symmetry_and_triangle(
        x in small_set(2),
        y in small_set(2),
        z in small_set(2),
    ) {
        let dxy = hausdorff(&x, &y).unwrap();
        let dyx = hausdorff(&y, &x).unwrap();
        prop_assert!((dxy - dyx).abs() < 1e-12);
        let dxz = hausdorff(&x, &z).unwrap();
        let dyz = hausdorff(&y, &z).unwrap();
        prop_assert!(dxz <= dxy + dyz + 1e-12);
        prop_assert_eq!(hausdorff(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn action_axiom_on_random_triples(seed in 0u64..1u64 << 48, p in unit_point(2)) {
        let mut rng = SplitMix64::new(seed);
        let g = random_group_element(&mut rng, 2, 1.0, true);
        let h = random_group_element(&mut rng, 2, 1.0, true);
        let lhs = act(&g, &act(&h, &p));
        let rhs = act(&g.mul(&h), &p);
        prop_assert!(round_distance(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn canonicalization_is_idempotent(seed in 0u64..1u64 << 48) {
        let mut rng = SplitMix64::new(seed);
        let g = random_group_element(&mut rng, 2, 1.4, true);
        let once = g.canonicalize();
        let twice = once.canonicalize();
        prop_assert_eq!(&once.mat().data, &twice.mat().data);
    }

    #[test]
    fn parabolic_chart_conjugation(seed in 0u64..1u64 << 48, x in chart_point(2)) {
        let mut rng = SplitMix64::new(seed);
        let p = mobius_core::group::random_parabolic(&mut rng, 2, 1.0);
        let via_sphere = chart(&act(&p.to_group(), &chart_inv(&x))).unwrap();
        prop_assert!(vecn::dist(&via_sphere, &p.apply_chart(&x)) < 1e-9);
    }

    #[test]
    fn rotations_are_round_isometries(seed in 0u64..1u64 << 48, p in unit_point(2), q in unit_point(2)) {
        let mut rng = SplitMix64::new(seed);
        let rot = mobius_core::group::random_rotation(&mut rng, 3);
        let k = mobius_core::group::compact_element(&rot).unwrap();
        let before = round_distance(&p, &q);
        let after = round_distance(&act(&k, &p), &act(&k, &q));
        prop_assert!((before - after).abs() < 1e-10);
    }
}

#[test]
fn parabolic_composition_matches_chart_composition() {
    let mut rng = SplitMix64::new(7);
    for _ in 0..50 {
        let p = mobius_core::group::random_parabolic(&mut rng, 2, 1.0);
        let q = mobius_core::group::random_parabolic(&mut rng, 2, 1.0);
        let x: Vec<f64> = (0..2).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let a = p.compose(&q).apply_chart(&x);
        let b = p.apply_chart(&q.apply_chart(&x));
        assert!(vecn::dist(&a, &b) < 1e-10);
        // and the embeddings multiply the same way
        let diff = p
            .compose(&q)
            .to_group()
            .max_abs_diff(&p.to_group().mul(&q.to_group()).canonicalize());
        assert!(diff < 1e-10);
    }
}

#[test]
fn identity_is_rejected_as_generator() {
    let id = GroupElement::identity(2);
    assert!(mobius_core::kleinian::GroupPresentation::new(vec![id], vec!["e".into()]).is_err());
}

#[test]
fn parabolic_requires_orthogonal_rotation() {
    let mut bad = Mat::identity(2);
    bad[(0, 1)] = 0.5;
    assert!(ParabolicElement::new(1.0, bad, vec![0.0, 0.0]).is_err());
    assert!(ParabolicElement::new(-1.0, Mat::identity(2), vec![0.0, 0.0]).is_err());
}
