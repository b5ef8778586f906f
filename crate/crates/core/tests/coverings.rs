use proptest::prelude::*;

use vce_core::coverings::{
    covering_number, maximal_separated_subset, packing_cover_bracket, strict_packing_2t, verify_cover, BallShape,
    CoverMode, Normalization, Strategy as Pick,
};
use vce_core::spaces::{PointSet, QuasiMetric};
use vce_core::Budget;

/// Maximum size of a subset pairwise at distance `>= eps`, over all subsets.
fn brute_packing(a: &PointSet, shape: &BallShape, eps: f64) -> usize {
    let k = a.len();
    (0u32..1 << k)
        .filter(|mask| {
            let idx: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
            idx.iter()
                .enumerate()
                .all(|(x, &i)| idx[x + 1..].iter().all(|&j| shape.distance(a.point(i), a.point(j)) >= eps - 1e-9))
        })
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

#[test]
fn line_packing_brute_force() {
    let a = PointSet::real(vec![vec![0.0], vec![0.4], vec![0.8], vec![1.2]]).unwrap();
    let shape = BallShape::lp(1.0, Normalization::Unit);
    let exact = maximal_separated_subset(&a, &shape, 0.5, Pick::Exact, &Budget::unlimited()).unwrap();
    assert_eq!(exact.len(), brute_packing(&a, &shape, 0.5));
    assert_eq!(exact.len(), 2);
}

#[test]
fn random_l2_cover_in_bracket() {
    let mut s = vce_core::rng::Stream::new(3);
    let pts: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| s.uniform_in(-1.0, 1.0)).collect()).collect();
    let a = PointSet::interval(pts).unwrap();
    let shape = BallShape::lp(2.0, Normalization::Unit);
    let r = covering_number(&a, &shape, 0.7, true, CoverMode::Exact, &Budget::unlimited()).unwrap();
    let exact = r.exact.as_ref().unwrap();
    assert!(r.lower.value <= exact.value && exact.value <= r.upper.value);
    assert!(verify_cover(&a, &shape, 0.7, exact.centers.as_ref().unwrap()));
}

#[test]
fn boolean_cube_code() {
    // maximum binary code of length 4 and minimum distance 2 has 8 words
    let a = PointSet::full_boolean_cube(4);
    let shape = BallShape::hamming(QuasiMetric::zero_one());
    let r = packing_cover_bracket(&a, &shape, 0.26, &Budget::unlimited()).unwrap();
    assert!(r.packing_exact);
    assert_eq!(r.packing, 8);
    assert!(r.consistent);
}

#[test]
fn singleton_bracket() {
    let a = PointSet::interval(vec![vec![0.1, 0.2]]).unwrap();
    let r = packing_cover_bracket(&a, &BallShape::linf(), 0.3, &Budget::unlimited()).unwrap();
    assert_eq!(r.packing, 1);
    assert_eq!(r.restricted_cover, 1);
}

fn point_sets() -> impl Strategy<Value = PointSet> {
    (1usize..4, 2usize..12).prop_flat_map(|(n, m)| {
        prop::collection::vec(prop::collection::vec(-1.0f64..=1.0, n), m)
            .prop_map(|rows| PointSet::interval(rows).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sandwich_for_every_gauge(a in point_sets(), t in 0.1f64..1.0, g in 0usize..4) {
        let shape = match g {
            0 => BallShape::lp(1.0, Normalization::NTo1OverP),
            1 => BallShape::lp(2.0, Normalization::NTo1OverP),
            2 => BallShape::linf(),
            _ => BallShape::lp(2.0, Normalization::Unit),
        };
        let b = Budget::unlimited();
        for restricted in [true, false] {
            let r = covering_number(&a, &shape, t, restricted, CoverMode::Exact, &b).unwrap();
            let exact = r.exact.as_ref().unwrap();
            prop_assert!(r.lower.value <= exact.value && exact.value <= r.upper.value);
            let packing = strict_packing_2t(&a, &shape, t, Pick::Exact, &b).unwrap();
            prop_assert!(packing <= exact.value);
        }
    }

    #[test]
    fn cover_monotone(a in point_sets(), t in 0.1f64..0.8) {
        let shape = BallShape::linf();
        let b = Budget::unlimited();
        let small = covering_number(&a, &shape, t, true, CoverMode::Exact, &b).unwrap().exact.unwrap().value;
        let large = covering_number(&a, &shape, 2.0 * t, true, CoverMode::Exact, &b).unwrap().exact.unwrap().value;
        prop_assert!(large <= small);
        // subsets only shrink covers when centers are free
        let free = covering_number(&a, &shape, t, false, CoverMode::Exact, &b).unwrap().exact.unwrap().value;
        let sub = a.subset(&(0..a.len().div_ceil(2)).collect::<Vec<_>>());
        let part = covering_number(&sub, &shape, t, false, CoverMode::Exact, &b).unwrap().exact.unwrap().value;
        prop_assert!(part <= free && free <= small);
    }

    #[test]
    fn packing_shrinks_with_scale(a in point_sets(), t in 0.05f64..0.5) {
        let shape = BallShape::lp(2.0, Normalization::Unit);
        let b = Budget::unlimited();
        let m1 = maximal_separated_subset(&a, &shape, t, Pick::Exact, &b).unwrap().len();
        let m2 = maximal_separated_subset(&a, &shape, 2.0 * t, Pick::Exact, &b).unwrap().len();
        prop_assert!(m2 <= m1);
        prop_assert_eq!(m1, brute_packing(&a, &shape, t));
    }
}
