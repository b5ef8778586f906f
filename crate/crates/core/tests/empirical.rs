use proptest::prelude::*;

use vce_core::coverings::CoverMode;
use vce_core::empirical::{empirical_entropy, fat_shattering, inflated_vc, is_shattered, vc_fat_chain, FunctionClassSample};
use vce_core::harness::random_class;
use vce_core::rng::Stream;
use vce_core::Budget;

/// Whether `subset` is `eps`-shattered: each level can be taken as some
/// `f(x_j) + eps`, the smallest value the low side allows.
fn shattered_by_search(f: &FunctionClassSample, subset: &[usize], eps: f64) -> bool {
    let k = subset.len();
    let cands: Vec<Vec<f64>> = subset.iter().map(|&i| f.values.iter().map(|r| r[i] + eps).collect()).collect();
    let mut idx = vec![0usize; k];
    loop {
        let gamma: Vec<f64> = idx.iter().zip(&cands).map(|(&i, c)| c[i]).collect();
        let ok = (0u32..1 << k).all(|mask| {
            f.values.iter().any(|row| {
                subset.iter().zip(&gamma).enumerate().all(|(j, (&i, &g))| {
                    if mask >> j & 1 == 1 {
                        row[i] >= g + eps - 1e-9
                    } else {
                        row[i] <= g - eps + 1e-9
                    }
                })
            })
        });
        if ok {
            return true;
        }
        let mut j = 0;
        loop {
            if j == k {
                return false;
            }
            idx[j] += 1;
            if idx[j] < cands[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

fn brute_fat(f: &FunctionClassSample, eps: f64) -> usize {
    let n = f.points();
    (1u32..1 << n)
        .filter(|m| 1usize << m.count_ones() <= f.len())
        .filter(|m| shattered_by_search(f, &(0..n).filter(|i| m >> i & 1 == 1).collect::<Vec<_>>(), eps))
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

#[test]
fn boolean_cube_shattered_below_half() {
    let f = FunctionClassSample::boolean_cube(4);
    let b = Budget::unlimited();
    assert_eq!(fat_shattering(&f, 0.5, &b).unwrap().dimension, 4);
    assert_eq!(fat_shattering(&f, 0.51, &b).unwrap().dimension, 0);
}

#[test]
fn constant_class_has_no_shattering() {
    let f = FunctionClassSample::new(vec![vec![0.3, -0.2, 0.9]; 5]).unwrap();
    let b = Budget::unlimited();
    assert_eq!(fat_shattering(&f, 0.01, &b).unwrap().dimension, 0);
    assert!(is_shattered(&f, &[1], 0.01, &b).unwrap().is_none());
    let e = empirical_entropy(&f, 0.1, CoverMode::Exact, &b).unwrap();
    assert_eq!(e.value, 1);
}

#[test]
fn fat_matches_level_search() {
    let mut s = Stream::new(404);
    for _ in 0..40 {
        let m = 2 + s.below(10);
        let n = 1 + s.below(5);
        let f = random_class(&mut s, m, n, None);
        let eps = s.uniform_in(0.02, 0.6);
        let got = fat_shattering(&f, eps, &Budget::unlimited()).unwrap();
        assert_eq!(got.dimension, brute_fat(&f, eps), "{:?} eps {eps}", f.values);
        assert!(got.witness.verify(&f, eps));
    }
}

fn classes() -> impl Strategy<Value = FunctionClassSample> {
    (1usize..16, 1usize..6, any::<u64>()).prop_map(|(m, n, seed)| random_class(&mut Stream::new(seed), m, n, None))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fat_is_monotone(f in classes(), eps in 0.02f64..0.4) {
        let b = Budget::unlimited();
        let lo = fat_shattering(&f, eps, &b).unwrap();
        let hi = fat_shattering(&f, 2.0 * eps, &b).unwrap();
        prop_assert!(hi.dimension <= lo.dimension);
        prop_assert!(lo.witness.verify(&f, eps));
        prop_assert!(is_shattered(&f, &lo.witness.subset, eps, &b).unwrap().is_some());
    }

    #[test]
    fn inflated_vc_chain_holds(f in classes(), t in 0.05f64..0.95) {
        let b = Budget::unlimited();
        let c = vc_fat_chain(&f, t, &b).unwrap();
        prop_assert!(c.holds);
        prop_assert!(c.inflated_vc.dimension <= c.fat.dimension);
        let wider = inflated_vc(&f, t / 4.0, t / 2.0, &b).unwrap();
        prop_assert!(wider.dimension >= c.inflated_vc.dimension);
    }

    #[test]
    fn entropy_bounds_bracket_exact(f in classes(), t in 0.05f64..1.0) {
        let b = Budget::unlimited();
        let exact = empirical_entropy(&f, t, CoverMode::Exact, &b).unwrap().value;
        prop_assert!(empirical_entropy(&f, t, CoverMode::LowerBound, &b).unwrap().value <= exact);
        prop_assert!(exact <= empirical_entropy(&f, t, CoverMode::UpperBound, &b).unwrap().value);
        prop_assert!(empirical_entropy(&f, 2.0 * t, CoverMode::Exact, &b).unwrap().value <= exact);
    }
}
