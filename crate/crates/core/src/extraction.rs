//! Constructive extraction procedures: random coordinate subsets that keep a
//! set system large, recursive extraction of embedded large cubes, and greedy
//! refinement to many-coordinate separation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dimensions::{embeds, Cube};
use crate::error::{Result, VceError};
use crate::rng::{derive_seed, Stream};
use crate::spaces::{min_pairwise_separation, separated_at, separated_count, PointSet, QuasiMetric};

/// Subsets of `{0, ..., n-1}`, stored sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetSystem {
    pub n: usize,
    pub sets: Vec<Vec<usize>>,
}

impl SetSystem {
    pub fn new(n: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        let mut clean = Vec::with_capacity(sets.len());
        for (k, mut s) in sets.into_iter().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                return Err(VceError::InvalidInput(format!("set {k} is empty")));
            }
            if let Some(&bad) = s.iter().find(|&&i| i >= n) {
                return Err(VceError::InvalidInput(format!("set {k} contains {bad}, outside 0..{n}")));
            }
            clean.push(s);
        }
        Ok(SetSystem { n, sets: clean })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: SetSystem = serde_json::from_str(s)?;
        Self::new(raw.n, raw.sets)
    }

    /// `S(x, y)` for every distinct pair of `a`: the coordinates where the
    /// pair is separated.
    pub fn from_separation(a: &PointSet, m: &QuasiMetric, level: f64) -> Result<Self> {
        let mut sets = Vec::new();
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                let s: Vec<usize> = (0..a.dim())
                    .filter(|&c| separated_at(m.distance(a.point(i)[c], a.point(j)[c]), level))
                    .collect();
                if s.is_empty() {
                    return Err(VceError::Precondition(format!("points {i} and {j} are not separated anywhere")));
                }
                sets.push(s);
            }
        }
        Self::new(a.dim(), sets)
    }

    pub fn min_size(&self) -> usize {
        self.sets.iter().map(Vec::len).min().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionReport<T> {
    pub output: T,
    pub attempts: usize,
    pub guarantee: f64,
    pub achieved: usize,
    pub seed: u64,
}

fn check_coordinate_args(s: &SetSystem, eps: f64, k: usize) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(VceError::InvalidInput(format!("eps = {eps} must lie in (0, 1]")));
    }
    if k == 0 || k > s.n {
        return Err(VceError::Precondition(format!("k = {k} must lie in 1..={}", s.n)));
    }
    let need = eps * s.n as f64 - 1e-9;
    if let Some((idx, set)) = s.sets.iter().enumerate().find(|(_, set)| (set.len() as f64) < need) {
        return Err(VceError::Precondition(format!(
            "set {idx} has {} elements, fewer than eps * n = {}",
            set.len(),
            eps * s.n as f64
        )));
    }
    Ok(())
}

/// One sampling round: each coordinate kept with probability `k / 2n`.
/// Returns the sample and whether it meets both requirements, together with
/// the smallest intersection size.
fn sample_once(s: &SetSystem, eps: f64, k: usize, stream: &mut Stream) -> (Vec<usize>, bool, usize) {
    let delta = k as f64 / (2 * s.n) as f64;
    let mut inside = vec![false; s.n];
    let mut chosen = Vec::new();
    for (i, slot) in inside.iter_mut().enumerate() {
        if stream.bernoulli(delta) {
            *slot = true;
            chosen.push(i);
        }
    }
    let need = eps * k as f64 / 4.0;
    let min_hit = s
        .sets
        .iter()
        .map(|set| set.iter().filter(|&&i| inside[i]).count())
        .min()
        .unwrap_or(0);
    let ok = chosen.len() <= k && min_hit as f64 >= need;
    (chosen, ok, min_hit)
}

/// Whether a single sampling round with the given seed succeeds.
pub fn coordinate_attempt(s: &SetSystem, eps: f64, k: usize, seed: u64) -> Result<bool> {
    check_coordinate_args(s, eps, k)?;
    Ok(sample_once(s, eps, k, &mut Stream::new(seed)).1)
}

/// Samples `I` until `|I| <= k` and `|I ∩ S| >= eps k / 4` for every set.
/// Attempt `a` draws from the stream `derive_seed(seed, a)`.
pub fn extract_coordinates(
    s: &SetSystem,
    eps: f64,
    k: usize,
    seed: u64,
    max_attempts: usize,
) -> Result<ExtractionReport<Vec<usize>>> {
    check_coordinate_args(s, eps, k)?;
    for attempt in 0..max_attempts {
        let (coords, ok, _) = sample_once(s, eps, k, &mut Stream::new(derive_seed(seed, attempt as u64)));
        if ok {
            // recheck independently of the sampler's bookkeeping
            let achieved = s
                .sets
                .iter()
                .map(|set| set.iter().filter(|i| coords.binary_search(i).is_ok()).count())
                .min()
                .unwrap_or(0);
            debug_assert!(coords.len() <= k && achieved as f64 >= eps * k as f64 / 4.0);
            return Ok(ExtractionReport {
                output: coords,
                attempts: attempt + 1,
                guarantee: eps * k as f64 / 4.0,
                achieved,
                seed,
            });
        }
    }
    Err(VceError::AttemptsExhausted { attempts: max_attempts })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeFamily {
    /// Distinct nonempty large cubes, by dimension then coordinates.
    pub cubes: Vec<Cube>,
    pub max_cube: Option<Cube>,
    pub max_dimension: usize,
    /// Recursion nodes whose slice was checked for the full separation count.
    pub slice_checks: usize,
    /// Slices where some pair had fewer than `ceil(eps n)` separated
    /// coordinates among the unfixed ones.
    pub slice_violations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeOptions {
    pub seed: u64,
    /// Largest family size held at any node before giving up.
    pub max_family: usize,
}

impl Default for CubeOptions {
    fn default() -> Self {
        CubeOptions {
            seed: 0,
            max_family: 2_000_000,
        }
    }
}

type Key = (usize, u64, u64);
type Family = BTreeSet<Vec<Key>>;

struct Ctx<'a> {
    b: &'a PointSet,
    m: &'a QuasiMetric,
    need: usize,
    max_family: usize,
}

struct Node {
    family: Family,
    checks: usize,
    violations: usize,
}

fn family_of(ctx: &Ctx<'_>, members: Vec<usize>, fixed: Vec<bool>, seed: u64) -> Result<Node> {
    let mut leaf = Family::new();
    leaf.insert(Vec::new());
    if members.len() < 2 {
        return Ok(Node {
            family: leaf,
            checks: 0,
            violations: 0,
        });
    }
    let n = ctx.b.dim();
    let checks = 1;
    let mut violations = 0;
    'outer: for (x, &i) in members.iter().enumerate() {
        for &j in &members[x + 1..] {
            let c = (0..n)
                .filter(|&c| !fixed[c] && separated_at(ctx.m.distance(ctx.b.point(i)[c], ctx.b.point(j)[c]), 0.0))
                .count();
            if c < ctx.need {
                violations = 1;
                break 'outer;
            }
        }
    }
    let mut order = members;
    Stream::new(seed).shuffle(&mut order);
    // The class at (i0, {u, v}) can hold at most min(#u, #v) pairs under any
    // pairing; pick the coordinate and value pair maximizing it and match
    // u-points with v-points in shuffled order.
    let mut best: Option<(usize, usize, f64, f64)> = None;
    for c in 0..n {
        if fixed[c] {
            continue;
        }
        let mut counts: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
        for &p in &order {
            let v = ctx.b.point(p)[c];
            counts.entry(ordered_bits(v)).or_insert((v, 0)).1 += 1;
        }
        let vals: Vec<(f64, usize)> = counts.into_values().collect();
        for (x, &(u, cu)) in vals.iter().enumerate() {
            for &(v, cv) in &vals[x + 1..] {
                let size = cu.min(cv);
                if best.is_none_or(|b| size > b.1) && separated_at(ctx.m.distance(u, v), 0.0) {
                    best = Some((c, size, u, v));
                }
            }
        }
    }
    let Some((i0, size, b1, b2)) = best else {
        return Ok(Node {
            family: leaf,
            checks,
            violations,
        });
    };
    let low: Vec<usize> = order.iter().copied().filter(|&p| ctx.b.point(p)[i0] == b1).take(size).collect();
    let high: Vec<usize> = order.iter().copied().filter(|&p| ctx.b.point(p)[i0] == b2).take(size).collect();
    let mut sub_fixed = fixed;
    sub_fixed[i0] = true;
    let s1 = derive_seed(seed, 1);
    let s2 = derive_seed(seed, 2);
    let (r1, r2) = if low.len() > 32 {
        let f2 = sub_fixed.clone();
        rayon::join(|| family_of(ctx, low, sub_fixed, s1), || family_of(ctx, high, f2, s2))
    } else {
        let f2 = sub_fixed.clone();
        (family_of(ctx, low, sub_fixed, s1), family_of(ctx, high, f2, s2))
    };
    let (n1, n2) = (r1?, r2?);
    let mut family = Family::new();
    for c in n1.family.intersection(&n2.family) {
        let mut ext = c.clone();
        let pos = ext.partition_point(|k| k.0 < i0);
        ext.insert(pos, (i0, b1.to_bits(), b2.to_bits()));
        family.insert(ext);
    }
    family.extend(n1.family);
    family.extend(n2.family);
    if family.len() > ctx.max_family {
        return Err(VceError::TooLarge(format!(
            "cube family exceeded the cap of {} members",
            ctx.max_family
        )));
    }
    Ok(Node {
        family,
        checks: checks + n1.checks + n2.checks,
        violations: violations + n1.violations + n2.violations,
    })
}

/// Total-order key for floats: sorts like `f64::total_cmp`.
fn ordered_bits(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | 1 << 63
    }
}

/// Size of the value set used in the guarantee: the alphabet size when it is
/// finite, otherwise the number of distinct values occurring in `b`.
fn value_count(b: &PointSet) -> usize {
    b.alphabet.size().unwrap_or_else(|| {
        let mut v: Vec<u64> = b.points.iter().flatten().map(|x| ordered_bits(*x)).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    })
}

/// `floor(m^(1 / (2 ln(|T|^2 / eps))))` for `m >= 4`, and 1 for `m` in
/// `2..4`.
pub fn cube_count_guarantee(m: usize, t_size: usize, eps: f64) -> f64 {
    if m < 2 {
        return 0.0;
    }
    if m < 4 {
        return 1.0;
    }
    let r = (t_size as f64).powi(2) / eps;
    (m as f64).powf(1.0 / (2.0 * r.ln())).floor()
}

/// Recursive cube extraction. `b` must have every distinct pair separated
/// (distance `> 0`) on at least `eps n` coordinates.
pub fn extract_cubes(
    b: &PointSet,
    m: &QuasiMetric,
    eps: f64,
    options: CubeOptions,
) -> Result<ExtractionReport<CubeFamily>> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(VceError::InvalidInput(format!("eps = {eps} must lie in (0, 1/2]")));
    }
    m.check_alphabet(&b.alphabet)?;
    let n = b.dim();
    let need = (eps * n as f64 - 1e-9).ceil().max(0.0) as usize;
    if b.len() >= 2 {
        let (min_sep, (i, j)) = min_pairwise_separation(b, m, 0.0)?;
        if min_sep < need {
            return Err(VceError::Precondition(format!(
                "points {i} and {j} are separated on {min_sep} coordinates, fewer than eps * n = {}",
                eps * n as f64
            )));
        }
    }
    let ctx = Ctx {
        b,
        m,
        need,
        max_family: options.max_family,
    };
    let node = family_of(&ctx, (0..b.len()).collect(), vec![false; n], options.seed)?;

    let mut cubes: Vec<Cube> = Vec::new();
    for keys in node.family.iter().filter(|k| !k.is_empty()) {
        let cube = Cube::new(
            keys.iter().map(|k| k.0).collect(),
            keys.iter().map(|k| (f64::from_bits(k.1), f64::from_bits(k.2))).collect(),
        )?;
        cubes.push(cube);
    }
    cubes.sort_by(|x, y| {
        y.dim()
            .cmp(&x.dim())
            .then_with(|| x.sigma.cmp(&y.sigma))
            .then_with(|| cmp_pairs(&x.pairs, &y.pairs))
    });
    let mut achieved = 0;
    for c in &cubes {
        if c.is_large(m, 0.0) && embeds(c, b)? {
            achieved += 1;
        } else {
            return Err(VceError::Numerical(format!("extracted cube on {:?} failed re-verification", c.sigma)));
        }
    }
    let max_cube = cubes.first().cloned();
    let max_dimension = max_cube.as_ref().map_or(0, Cube::dim);
    Ok(ExtractionReport {
        output: CubeFamily {
            cubes,
            max_cube,
            max_dimension,
            slice_checks: node.checks,
            slice_violations: node.violations,
        },
        attempts: 1,
        guarantee: cube_count_guarantee(b.len(), value_count(b), eps),
        achieved,
        seed: options.seed,
    })
}

fn cmp_pairs(a: &[(f64, f64)], b: &[(f64, f64)]) -> std::cmp::Ordering {
    for (p, q) in a.iter().zip(b) {
        let o = p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1));
        if o.is_ne() {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `C(n, k)^-1 (c t)^k |A|`.
pub fn refine_guarantee(n: usize, k: usize, t: f64, c: f64, size: usize) -> f64 {
    (c * t).powi(k as i32) * size as f64 / binomial(n, k)
}

/// Greedy subset of `a` in which every distinct pair differs by at least
/// `t / 2` on at least `k` coordinates. `c` only scales the reported
/// guarantee.
pub fn refine_separation(a: &PointSet, t: f64, k: usize, c: f64) -> Result<ExtractionReport<Vec<usize>>> {
    let n = a.dim();
    if !(t > 0.0) {
        return Err(VceError::InvalidInput(format!("t = {t} must be positive")));
    }
    if k == 0 || 2 * k > n {
        return Err(VceError::Precondition(format!("k = {k} must lie in 1..={}", n / 2)));
    }
    if let Some(v) = a.points.iter().flatten().find(|v| !(-1.0..=1.0).contains(*v)) {
        return Err(VceError::Precondition(format!("value {v} outside [-1, 1]")));
    }
    let abs = QuasiMetric::absolute();
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let d = a.point(i).iter().zip(a.point(j)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            if d < t - 1e-12 {
                return Err(VceError::Precondition(format!(
                    "points {i} and {j} are at sup-distance {d} < t = {t}"
                )));
            }
        }
    }
    let level = t / 2.0;
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..a.len() {
        if kept.iter().all(|&j| separated_count(a.point(i), a.point(j), &abs, level) >= k) {
            kept.push(i);
        }
    }
    let achieved = kept.len();
    for (x, &i) in kept.iter().enumerate() {
        for &j in &kept[x + 1..] {
            let cnt = (0..n).filter(|&c| (a.point(i)[c] - a.point(j)[c]).abs() >= level).count();
            if cnt < k {
                return Err(VceError::Numerical(format!("refined pair ({i}, {j}) failed re-verification")));
            }
        }
    }
    Ok(ExtractionReport {
        output: kept,
        attempts: 1,
        guarantee: refine_guarantee(n, k, t, c, a.len()),
        achieved,
        seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::Budget;
    use crate::dimensions::boolean_vc;

    fn hamming74() -> PointSet {
        let g = [[1u8, 0, 0, 0, 1, 1, 0], [0, 1, 0, 0, 1, 0, 1], [0, 0, 1, 0, 0, 1, 1], [0, 0, 0, 1, 1, 1, 1]];
        let pts = (0..16u8)
            .map(|msg| {
                (0..7)
                    .map(|c| (0..4).fold(0u8, |acc, r| acc ^ ((msg >> r & 1) * g[r][c])))
                    .collect()
            })
            .collect();
        PointSet::boolean(pts).unwrap()
    }

    /// Every nonempty large cube embedding into a Boolean set.
    fn all_embedded_cubes(a: &PointSet) -> usize {
        let n = a.dim();
        (1u32..1 << n)
            .filter(|s| {
                let sigma: Vec<usize> = (0..n).filter(|&i| s >> i & 1 == 1).collect();
                embeds(&Cube::new(sigma.clone(), vec![(0.0, 1.0); sigma.len()]).unwrap(), a).unwrap()
            })
            .count()
    }

    #[test]
    fn coordinate_examples() {
        let full = SetSystem::new(100, vec![(0..100).collect()]).unwrap();
        let r = extract_coordinates(&full, 1.0, 4, 7, 64).unwrap();
        assert!(r.output.len() <= 4 && !r.output.is_empty());
        let all = SetSystem::new(10, vec![(0..10).collect(), (0..5).collect()]).unwrap();
        let r = extract_coordinates(&all, 0.5, 10, 3, 64).unwrap();
        assert!(r.output.len() <= 10);
        assert!(r.achieved as f64 >= 0.5 * 10.0 / 4.0);
        let small = SetSystem::new(10, vec![vec![1]]).unwrap();
        assert!(matches!(extract_coordinates(&small, 0.5, 4, 0, 4), Err(VceError::Precondition(_))));
        assert!(matches!(extract_coordinates(&full, 1.0, 0, 0, 4), Err(VceError::Precondition(_))));
        let tough = SetSystem::new(100, vec![(0..100).collect()]).unwrap();
        assert!(matches!(
            extract_coordinates(&tough, 1.0, 100, 0, 0),
            Err(VceError::AttemptsExhausted { attempts: 0 })
        ));
    }

    #[test]
    fn random_sets_succeed_often() {
        let mut s = Stream::new(99);
        let sets: Vec<Vec<usize>> = (0..10)
            .map(|_| {
                let mut idx: Vec<usize> = (0..100).collect();
                s.shuffle(&mut idx);
                idx.truncate(30 + s.below(20));
                idx
            })
            .collect();
        let sys = SetSystem::new(100, sets).unwrap();
        let wins = (0..1000).filter(|&t| coordinate_attempt(&sys, 0.3, 40, derive_seed(5, t)).unwrap()).count();
        assert!(wins > 500, "{wins}");
    }

    #[test]
    fn full_cube_yields_top_cube() {
        let cube = PointSet::full_boolean_cube(3);
        let r = extract_cubes(&cube, &QuasiMetric::zero_one(), 1.0 / 3.0, CubeOptions::default()).unwrap();
        assert_eq!(r.output.max_dimension, 3);
        assert_eq!(r.achieved, r.output.cubes.len());
        assert_eq!(r.output.slice_violations, 0);
    }

    #[test]
    fn two_points_give_an_edge() {
        let b = PointSet::boolean(vec![vec![0, 0, 1], vec![1, 1, 1]]).unwrap();
        let r = extract_cubes(&b, &QuasiMetric::zero_one(), 0.5, CubeOptions::default()).unwrap();
        assert!(r.achieved >= 1);
        assert!(r.output.cubes.iter().all(|c| c.dim() == 1));
        let bad = PointSet::boolean(vec![vec![0, 0, 1], vec![1, 0, 1]]).unwrap();
        assert!(matches!(
            extract_cubes(&bad, &QuasiMetric::zero_one(), 0.5, CubeOptions::default()),
            Err(VceError::Precondition(_))
        ));
    }

    #[test]
    fn hamming_code_against_enumeration() {
        let b = hamming74();
        let vc = boolean_vc(&b, &Budget::unlimited()).unwrap().dimension;
        let total = all_embedded_cubes(&b);
        for seed in 0..8 {
            let r = extract_cubes(&b, &QuasiMetric::zero_one(), 3.0 / 7.0, CubeOptions { seed, ..Default::default() })
                .unwrap();
            assert!(r.achieved as f64 >= r.guarantee, "seed {seed}");
            assert!(r.achieved <= total);
            assert!(r.output.max_dimension <= vc);
        }
    }

    #[test]
    fn extraction_is_seed_deterministic() {
        let b = hamming74();
        let o = CubeOptions { seed: 11, ..Default::default() };
        let r1 = extract_cubes(&b, &QuasiMetric::zero_one(), 3.0 / 7.0, o).unwrap();
        let r2 = extract_cubes(&b, &QuasiMetric::zero_one(), 3.0 / 7.0, o).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn family_cap_is_explicit() {
        let b = PointSet::full_boolean_cube(6);
        let r = extract_cubes(&b, &QuasiMetric::zero_one(), 1.0 / 6.0, CubeOptions { seed: 0, max_family: 10 });
        assert!(matches!(r, Err(VceError::TooLarge(_))));
    }

    #[test]
    fn refine_examples() {
        let t = 0.5;
        let a = PointSet::interval(vec![vec![0.0, 0.0, 0.0, 0.0], vec![t, 0.0, 0.0, 0.0]]).unwrap();
        let r = refine_separation(&a, t, 1, 1.0).unwrap();
        assert_eq!(r.output, vec![0, 1]);
        let spread = PointSet::interval(vec![vec![-1.0, -1.0, -1.0, -1.0], vec![1.0, 1.0, 1.0, 1.0]]).unwrap();
        assert_eq!(refine_separation(&spread, 1.0, 2, 1.0).unwrap().achieved, 2);
        assert!(matches!(refine_separation(&a, 0.9, 1, 1.0), Err(VceError::Precondition(_))));
        assert!(matches!(refine_separation(&a, t, 3, 1.0), Err(VceError::Precondition(_))));
    }

    #[test]
    fn refine_random_points() {
        let mut s = Stream::new(4);
        let t = 0.4;
        let mut pts: Vec<Vec<f64>> = Vec::new();
        while pts.len() < 200 {
            let p: Vec<f64> = (0..10).map(|_| s.uniform_in(-1.0, 1.0)).collect();
            if pts.iter().all(|q| q.iter().zip(&p).any(|(x, y)| (x - y).abs() >= t)) {
                pts.push(p);
            }
        }
        let a = PointSet::interval(pts).unwrap();
        let r = refine_separation(&a, t, 2, 1.0).unwrap();
        assert!(r.achieved >= 1);
        let kept = a.subset(&r.output);
        let (min, _) = min_pairwise_separation(&kept, &QuasiMetric::absolute(), t / 2.0).unwrap();
        assert!(min >= 2);
    }

    #[test]
    fn guarantee_formula() {
        assert_eq!(cube_count_guarantee(2, 2, 0.5), 1.0);
        // 4^(1/(2 ln 8)) = 1.39...
        assert_eq!(cube_count_guarantee(4, 2, 0.5), 1.0);
        let g = cube_count_guarantee(1 << 20, 2, 0.5);
        assert_eq!(g, (2f64.powi(20)).powf(1.0 / (2.0 * 8f64.ln())).floor());
    }
}
