use proptest::prelude::*;

use vce_core::convex::{
    convex_vc, dual_norm, dudley_bound, min_signs_norm, projected_membership, sphere_mean_width, SymmetricPolytope,
};
use vce_core::harness::random_polytope;
use vce_core::rng::Stream;
use vce_core::Budget;

const TOL: f64 = 1e-7;

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Signed margin of `y` in `conv(pts)` for symmetric `pts` spanning `R^d`,
/// `d <= 3`, over normals of hyperplanes through `d` of the points.
fn hull_margin(pts: &[Vec<f64>], y: &[f64]) -> f64 {
    let d = y.len();
    let normals: Vec<Vec<f64>> = match d {
        1 => {
            let r = pts.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
            return r - y[0].abs();
        }
        2 => {
            let mut out = Vec::new();
            for (i, a) in pts.iter().enumerate() {
                for b in &pts[i + 1..] {
                    let e = sub(b, a);
                    out.push(vec![-e[1], e[0]]);
                }
            }
            out
        }
        3 => {
            let mut out = Vec::new();
            for (i, a) in pts.iter().enumerate() {
                for (j, b) in pts.iter().enumerate().skip(i + 1) {
                    for c in &pts[j + 1..] {
                        let (u, v) = (sub(b, a), sub(c, a));
                        out.push(vec![u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]);
                    }
                }
            }
            out
        }
        _ => unreachable!(),
    };
    let mut margin = f64::INFINITY;
    // every facet normal of a symmetric hull is spanned by d of its points
    for nrm in normals {
        let len = dot(&nrm, &nrm).sqrt();
        if len < 1e-9 {
            continue;
        }
        let nrm: Vec<f64> = nrm.iter().map(|v| v / len).collect();
        let support = pts.iter().map(|p| dot(p, &nrm)).fold(0.0, f64::max);
        margin = margin.min(support - dot(y, &nrm).abs());
    }
    margin
}

/// Largest `|sigma|` whose cube `(t/2){-1,1}^sigma` lies in `P_sigma K`,
/// by hull enumeration, or `None` when some vertex is too close to the
/// boundary to decide.
fn brute_convex_vc(p: &SymmetricPolytope, t: f64) -> Option<usize> {
    let n = p.n;
    let mut best = 0;
    for mask in 1u32..1 << n {
        let sigma: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let d = sigma.len();
        let mut pts = Vec::new();
        for g in &p.generators {
            let q: Vec<f64> = sigma.iter().map(|&i| g[i]).collect();
            pts.push(q.iter().map(|v| -v).collect::<Vec<f64>>());
            pts.push(q);
        }
        let mut inside = true;
        for v in 0u32..1 << d {
            let y: Vec<f64> = (0..d).map(|j| if v >> j & 1 == 1 { t / 2.0 } else { -t / 2.0 }).collect();
            let m = hull_margin(&pts, &y);
            if m.abs() < TOL {
                return None;
            }
            inside &= m > 0.0;
        }
        if inside {
            best = best.max(d);
        }
    }
    Some(best)
}

#[test]
fn square_mean_widths() {
    // E max(|cos|, |sin|) for the cross polytope and E(|cos| + |sin|) for the square
    let cross = sphere_mean_width(&SymmetricPolytope::cross_polytope(2), 40_000, 5).unwrap();
    assert!((cross.estimate - 2.0 * 2f64.sqrt() / std::f64::consts::PI).abs() < 4.0 * cross.stderr + 1e-3);
    let square = SymmetricPolytope::new(2, vec![vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
    let w = sphere_mean_width(&square, 40_000, 5).unwrap();
    assert!((w.estimate - 4.0 / std::f64::consts::PI).abs() < 4.0 * w.stderr + 1e-3);
}

#[test]
fn dense_polytope_width_near_one() {
    let mut s = Stream::new(9);
    let gens: Vec<Vec<f64>> = (0..3000).map(|_| s.sphere(3)).collect();
    let p = SymmetricPolytope::new(3, gens).unwrap();
    let w = sphere_mean_width(&p, 2000, 1).unwrap();
    assert!(w.estimate > 0.97 && w.estimate <= 1.0 + 1e-12);
}

#[test]
fn dudley_matches_trapezoid() {
    for (c, hi, n) in [(0.05, 1.0, 4.0), (0.2, 2.0, 10.0), (0.5, 0.9, 1.0)] {
        let entropy = move |t: f64| n * (1.0 + 2.0 / t).ln();
        let got = dudley_bound(entropy, c, hi).unwrap();
        let steps = 200_000;
        let h = (hi - c) / steps as f64;
        let mut reference = 0.5 * (entropy(c).sqrt() + entropy(hi).sqrt());
        for i in 1..steps {
            reference += entropy(c + i as f64 * h).sqrt();
        }
        reference *= h;
        assert!((got - reference).abs() < 1e-5 * reference, "{got} vs {reference}");
    }
    assert_eq!(dudley_bound(|_| 1.0, 1.0, 0.5).unwrap(), 0.0);
}

#[test]
fn min_signs_matches_enumeration() {
    let mut s = Stream::new(21);
    let linf = |x: &[f64]| x.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    for _ in 0..20 {
        let vecs: Vec<Vec<f64>> = (0..6).map(|_| (0..3).map(|_| s.uniform_in(-1.0, 1.0)).collect()).collect();
        let got = min_signs_norm(&vecs, linf).unwrap();
        let mut best = f64::INFINITY;
        for mask in 0u32..1 << 6 {
            if mask & 1 == 1 {
                continue;
            }
            let mut sum = [0.0; 3];
            for (i, v) in vecs.iter().enumerate() {
                let sign = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                for k in 0..3 {
                    sum[k] += sign * v[k];
                }
            }
            best = best.min(linf(&sum));
        }
        assert!((got.value - best).abs() < 1e-12);
        assert_eq!(got.signs[0], 1);
        let mut sum = [0.0; 3];
        for (v, &e) in vecs.iter().zip(&got.signs) {
            for k in 0..3 {
                sum[k] += f64::from(e) * v[k];
            }
        }
        assert!((linf(&sum) - got.value).abs() < 1e-12);
    }
}

#[test]
fn convex_vc_matches_hull_enumeration() {
    let mut s = Stream::new(77);
    let mut checked = 0;
    for _ in 0..60 {
        let n = 2 + s.below(2);
        let m = n + s.below(4);
        let p = random_polytope(&mut s, n, m);
        let t = s.uniform_in(0.05, 1.9);
        let Some(want) = brute_convex_vc(&p, t) else { continue };
        let got = convex_vc(&p, t, &Budget::unlimited()).unwrap();
        assert_eq!(got.dimension, want, "n = {n}, t = {t}, {:?}", p.generators);
        checked += 1;
    }
    assert!(checked >= 50);
}

fn polytopes() -> impl Strategy<Value = SymmetricPolytope> {
    (2usize..6, any::<u64>()).prop_map(|(n, seed)| {
        let mut s = Stream::new(seed);
        let m = n + s.below(6);
        random_polytope(&mut s, n, m)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dual_norm_is_a_seminorm(p in polytopes(), seed in any::<u64>(), c in -3.0f64..3.0) {
        let mut s = Stream::new(seed);
        let a = s.gaussian_vec(p.n);
        let b = s.gaussian_vec(p.n);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let scaled: Vec<f64> = a.iter().map(|x| c * x).collect();
        let (na, nb) = (dual_norm(&p, &a).unwrap(), dual_norm(&p, &b).unwrap());
        prop_assert!(dual_norm(&p, &sum).unwrap() <= na + nb + 1e-12);
        prop_assert!((dual_norm(&p, &scaled).unwrap() - c.abs() * na).abs() <= 1e-12 * (1.0 + na));
    }

    #[test]
    fn convex_vc_monotone_with_valid_witness(p in polytopes(), t in 0.1f64..1.0) {
        let b = Budget::unlimited();
        let lo = convex_vc(&p, t, &b).unwrap();
        let hi = convex_vc(&p, 2.0 * t, &b).unwrap();
        prop_assert!(lo.dimension >= hi.dimension);
        if let Some(w) = &lo.witness {
            let k = w.sigma.len();
            for v in 0u32..1 << k {
                let y: Vec<f64> = (0..k).map(|j| if v >> j & 1 == 1 { t / 2.0 } else { -t / 2.0 }).collect();
                prop_assert!(projected_membership(&p, &w.sigma, &y, -1e-9).unwrap());
            }
        }
    }

    #[test]
    fn minkowski_inclusion(seed in any::<u64>(), a in 0.6f64..1.8, frac in 0.05f64..0.25) {
        // (a/2)-cubes in P(K + b B_inf) leave (a/2 - b)-cubes in P K
        let mut s = Stream::new(seed);
        let n = 2 + s.below(3);
        let m = n + s.below(3);
        let p = random_polytope(&mut s, n, m);
        let bw = frac * a;
        let budget = Budget::unlimited();
        let boxed = p.minkowski_box(bw).unwrap();
        let crossed = p.with_cross(bw);
        let big = convex_vc(&boxed, a, &budget).unwrap().dimension;
        prop_assert!(convex_vc(&crossed, a, &budget).unwrap().dimension <= big);
        prop_assert!(big <= convex_vc(&p, a - 2.0 * bw, &budget).unwrap().dimension);
    }
}
