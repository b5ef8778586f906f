use proptest::prelude::*;

use vce_core::dimensions::vc_limit;
use vce_core::extraction::{
    cube_count_guarantee, extract_coordinates, extract_cubes, refine_separation, CubeOptions, SetSystem,
};
use vce_core::harness::{cube_embeds_naive, separated_set};
use vce_core::rng::Stream;
use vce_core::spaces::{PointSet, QuasiMetric};
use vce_core::{Budget, VceError};

#[test]
fn full_set_system() {
    let s = SetSystem::new(100, vec![(0..100).collect()]).unwrap();
    let r = extract_coordinates(&s, 1.0, 4, 3, 64).unwrap();
    assert!(r.output.len() <= 4 && !r.output.is_empty());
    let all = extract_coordinates(&s, 1.0, 100, 3, 64).unwrap();
    assert!(all.output.len() <= 100);
}

#[test]
fn exhausted_attempts_are_reported() {
    let s = SetSystem::new(10, vec![(0..5).collect(), (5..10).collect()]).unwrap();
    match extract_coordinates(&s, 0.5, 1, 0, 8) {
        Err(VceError::AttemptsExhausted { attempts }) => assert_eq!(attempts, 8),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn precondition_failures() {
    let s = SetSystem::new(10, vec![vec![0]]).unwrap();
    assert!(matches!(extract_coordinates(&s, 0.5, 2, 0, 4), Err(VceError::Precondition(_))));
    let b = PointSet::boolean(vec![vec![0, 0, 0], vec![0, 0, 1]]).unwrap();
    assert!(extract_cubes(&b, &QuasiMetric::zero_one(), 0.5, CubeOptions::default()).is_err());
    let a = PointSet::interval(vec![vec![0.0, 0.0], vec![0.05, 0.0]]).unwrap();
    assert!(refine_separation(&a, 0.5, 1, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn cubes_verify_and_meet_guarantee(seed in any::<u64>(), n in 3usize..9, p in 2usize..4, e in 0usize..3) {
        let eps = [0.25, 1.0 / 3.0, 0.5][e];
        let metric = QuasiMetric::zero_one();
        let mut s = Stream::new(seed);
        let need = (eps * n as f64 - 1e-9).ceil() as usize;
        let b = separated_set(&mut s, p, n, &metric, 0.0, need, 64, 2000);
        prop_assume!(b.len() >= 2);
        let rep = extract_cubes(&b, &metric, eps, CubeOptions { seed, ..CubeOptions::default() }).unwrap();
        prop_assert!(rep.output.cubes.len() as f64 >= cube_count_guarantee(b.len(), p, eps));
        for c in &rep.output.cubes {
            prop_assert!(cube_embeds_naive(c, &b));
            prop_assert!(c.is_large(&metric, 0.0));
        }
        let vc = vc_limit(&b, &metric, &Budget::unlimited()).unwrap().dimension;
        prop_assert!(rep.output.max_dimension <= vc);
        prop_assert_eq!(rep.achieved, rep.output.cubes.len());
    }

    #[test]
    fn refined_pairs_are_separated(seed in any::<u64>(), k in 1usize..3) {
        let mut s = Stream::new(seed);
        let n = 6;
        let t = 0.5;
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for _ in 0..400 {
            let c: Vec<f64> = (0..n).map(|_| s.uniform_in(-1.0, 1.0)).collect();
            if pts.iter().all(|p| p.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) >= t) {
                pts.push(c);
            }
            if pts.len() == 60 {
                break;
            }
        }
        let a = PointSet::interval(pts).unwrap();
        let r = refine_separation(&a, t, k, 1.0).unwrap();
        for (x, &i) in r.output.iter().enumerate() {
            for &j in &r.output[x + 1..] {
                let count = a.point(i).iter().zip(a.point(j)).filter(|(u, v)| (*u - *v).abs() >= t / 2.0).count();
                prop_assert!(count >= k);
            }
        }
        prop_assert_eq!(r.achieved, r.output.len());
    }

    #[test]
    fn coordinate_success_is_genuine(seed in any::<u64>()) {
        let mut s = Stream::new(seed);
        let n = 60;
        let sets: Vec<Vec<usize>> = (0..8)
            .map(|_| (0..n).filter(|_| s.bernoulli(0.6)).collect::<Vec<_>>())
            .filter(|v: &Vec<usize>| v.len() >= 30)
            .collect();
        prop_assume!(!sets.is_empty());
        let sys = SetSystem::new(n, sets).unwrap();
        if let Ok(r) = extract_coordinates(&sys, 0.5, 40, seed, 64) {
            prop_assert!(r.output.len() <= 40);
            for set in &sys.sets {
                let hit = set.iter().filter(|i| r.output.contains(i)).count();
                prop_assert!(hit as f64 >= 0.5 * 40.0 / 4.0);
            }
        }
    }
}
