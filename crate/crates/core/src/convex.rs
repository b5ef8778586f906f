//! Symmetric polytopes, cube-in-projection VC dimension, Gaussian averages,
//! the Dudley integral, sign minimization and Elton certificates.

use std::collections::HashSet;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::dimensions::{Cube, VcResult};
use crate::error::{Result, VceError};
use crate::lp::{self, LpOutcome, Scalar};
use crate::rng::{derive_seed, Stream};

/// Decisions closer than this to the boundary are re-solved exactly.
pub const LP_ETA: f64 = 1e-7;
/// Largest `m * |sigma|` solved in rational arithmetic from the start.
pub const RATIONAL_CELLS: usize = 2000;

/// `K = conv(+-v_1, ..., +-v_m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricPolytope {
    pub n: usize,
    pub generators: Vec<Vec<f64>>,
}

impl SymmetricPolytope {
    pub fn new(n: usize, generators: Vec<Vec<f64>>) -> Result<Self> {
        if generators.is_empty() {
            return Err(VceError::InvalidInput("a polytope needs at least one generator".into()));
        }
        for (j, g) in generators.iter().enumerate() {
            if g.len() != n {
                return Err(VceError::LengthMismatch { expected: n, got: g.len() });
            }
            if let Some(v) = g.iter().find(|v| !v.is_finite()) {
                return Err(VceError::InvalidInput(format!("generator {j} has non-finite entry {v}")));
            }
        }
        Ok(SymmetricPolytope { n, generators })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: SymmetricPolytope = serde_json::from_str(s)?;
        Self::new(raw.n, raw.generators)
    }

    /// `B_1^n`.
    pub fn cross_polytope(n: usize) -> Self {
        let gens = (0..n)
            .map(|i| (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect())
            .collect();
        SymmetricPolytope { n, generators: gens }
    }

    pub fn in_unit_cube(&self) -> bool {
        self.generators.iter().flatten().all(|v| v.abs() <= 1.0 + 1e-12)
    }

    /// `K + b B_inf^n`, realized by adding every vertex of `b B_inf^n`
    /// translated by each generator is too large; instead the generators
    /// `{v_j} ∪ {+-b e_i}` give `conv(K ∪ b B_1^n)`, which lies inside
    /// `K + b B_inf^n`.
    pub fn with_cross(&self, b: f64) -> Self {
        let mut gens = self.generators.clone();
        for i in 0..self.n {
            gens.push((0..self.n).map(|k| if k == i { b } else { 0.0 }).collect());
        }
        SymmetricPolytope { n: self.n, generators: gens }
    }

    /// Exact Minkowski sum `K + b B_inf^n`: generators `v_j + b s` over all
    /// sign vectors `s`. Limited to small `n * m`.
    pub fn minkowski_box(&self, b: f64) -> Result<Self> {
        if self.n > 12 || self.generators.len() << self.n > 1 << 16 {
            return Err(VceError::TooLarge("Minkowski sum with a cube is limited to 65536 generators".into()));
        }
        let mut gens = Vec::new();
        for v in &self.generators {
            for mask in 0u32..1 << self.n {
                gens.push(
                    v.iter()
                        .enumerate()
                        .map(|(i, x)| if mask >> i & 1 == 1 { x + b } else { x - b })
                        .collect(),
                );
            }
        }
        Ok(SymmetricPolytope { n: self.n, generators: gens })
    }
}

/// Support function of `K`, i.e. the norm with unit ball `K°`.
pub fn dual_norm(p: &SymmetricPolytope, a: &[f64]) -> Result<f64> {
    if a.len() != p.n {
        return Err(VceError::LengthMismatch { expected: p.n, got: a.len() });
    }
    Ok(support(&p.generators, a))
}

fn support(gens: &[Vec<f64>], a: &[f64]) -> f64 {
    gens.iter()
        .map(|v| v.iter().zip(a).map(|(x, y)| x * y).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

/// `(R^n, ||x|| = max_j |<phi_j, x>|)` with the given vectors as `e_1..e_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormedInstance {
    pub dual_generators: Vec<Vec<f64>>,
}

impl NormedInstance {
    pub fn new(dual_generators: Vec<Vec<f64>>) -> Result<Self> {
        let n = dual_generators.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(VceError::InvalidInput("instance needs non-empty dual generators".into()));
        }
        SymmetricPolytope::new(n, dual_generators.clone())?;
        for i in 0..n {
            let h = dual_generators.iter().map(|g| g[i].abs()).fold(0.0, f64::max);
            if h > 1.0 + 1e-12 {
                return Err(VceError::Precondition(format!(
                    "||e_{i}|| = {h} exceeds 1; vectors must lie in the unit ball"
                )));
            }
        }
        Ok(NormedInstance { dual_generators })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: NormedInstance = serde_json::from_str(s)?;
        Self::new(raw.dual_generators)
    }

    pub fn n(&self) -> usize {
        self.dual_generators[0].len()
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        support(&self.dual_generators, x)
    }

    pub fn polytope(&self) -> SymmetricPolytope {
        SymmetricPolytope {
            n: self.n(),
            generators: self.dual_generators.clone(),
        }
    }

    /// `l_1^n`: dual generators are the sign vectors with first entry `+1`.
    pub fn ell1(n: usize) -> Self {
        let gens = (0u32..1 << (n - 1))
            .map(|m| {
                (0..n)
                    .map(|i| if i > 0 && m >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 })
                    .collect()
            })
            .collect();
        NormedInstance { dual_generators: gens }
    }

    /// The space with unit ball `conv(B_1^n ∪ (delta sqrt n)^-1 B_2^n)`,
    /// whose dual ball is `B_inf^n ∩ delta sqrt(n) B_2^n`. The Euclidean
    /// part is discretized from inside by `points` seeded sphere directions
    /// clamped to the cube, so the norm never exceeds the exact one.
    pub fn rudelson(n: usize, delta: f64, points: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(VceError::InvalidInput("n must be positive".into()));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(VceError::InvalidInput(format!("delta = {delta} must lie in (0, 1]")));
        }
        let radius = delta * (n as f64).sqrt();
        let mut gens: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|k| if k == i { 1.0f64.min(radius) } else { 0.0 }).collect())
            .collect();
        for k in 0..points {
            let u = Stream::new(derive_seed(seed, k as u64)).sphere(n);
            gens.push(u.iter().map(|x| (radius * x).clamp(-1.0, 1.0)).collect());
        }
        Self::new(gens)
    }
}

/// Default number of sphere points for the Rudelson instance.
pub fn rudelson_default_points(n: usize) -> usize {
    2 * n * n
}

struct Gauge {
    /// `inf` when the target is outside the span.
    value: f64,
    /// Dual vector over `sigma` with `|<P v_j, z>| <= 1` (or `= 0` for a span
    /// certificate) and `<y, z>` equal to the value.
    z: Vec<f64>,
    /// Columns carrying the optimal representation.
    support: Vec<usize>,
}

fn gauge_generic<T: Scalar>(cols: &[Vec<f64>], y: &[f64], budget: &Budget) -> Result<(Option<T>, Vec<T>, Vec<usize>)> {
    let k = y.len();
    let m = cols.len();
    let mut a: Vec<Vec<T>> = vec![Vec::with_capacity(2 * m); k];
    for (r, row) in a.iter_mut().enumerate() {
        for c in cols {
            row.push(T::from_f64(c[r]));
        }
        for c in cols {
            row.push(T::from_f64(-c[r]));
        }
    }
    let b: Vec<T> = y.iter().map(|&v| T::from_f64(v)).collect();
    let c = vec![T::one(); 2 * m];
    match lp::solve(&a, &b, &c, budget)? {
        LpOutcome::Optimal { value, dual, x } => {
            let mut support: Vec<usize> = x.iter().enumerate().filter(|(_, v)| v.is_pos()).map(|(j, _)| j % m).collect();
            support.sort_unstable();
            support.dedup();
            Ok((Some(value), dual, support))
        }
        LpOutcome::Infeasible { ray } => Ok((None, ray, Vec::new())),
        LpOutcome::Unbounded => Err(VceError::Numerical("gauge program reported unbounded".into())),
    }
}

/// Gauge of `y` with respect to `conv(+-cols)`, exact near `threshold`.
fn gauge(cols: &[Vec<f64>], y: &[f64], threshold: f64, budget: &Budget) -> Result<Gauge> {
    let rational = cols.len() * y.len().max(1) <= RATIONAL_CELLS;
    let run_rational = |budget: &Budget| -> Result<Gauge> {
        let (v, z, support) = gauge_generic::<BigRational>(cols, y, budget)?;
        Ok(Gauge {
            value: v.map_or(f64::INFINITY, |v| Scalar::to_f64(&v)),
            z: z.iter().map(Scalar::to_f64).collect(),
            support,
        })
    };
    if rational {
        return run_rational(budget);
    }
    let (v, z, support) = gauge_generic::<f64>(cols, y, budget)?;
    let g = Gauge {
        value: v.unwrap_or(f64::INFINITY),
        z,
        support,
    };
    if g.value.is_finite() && (g.value - threshold).abs() < LP_ETA {
        return run_rational(budget);
    }
    Ok(g)
}

fn project(p: &SymmetricPolytope, sigma: &[usize]) -> Vec<Vec<f64>> {
    let mut seen = HashSet::new();
    p.generators
        .iter()
        .map(|v| sigma.iter().map(|&i| v[i]).collect::<Vec<f64>>())
        .filter(|v: &Vec<f64>| v.iter().any(|x| *x != 0.0))
        .filter(|v| {
            // v and -v span the same segment
            let canon: Vec<u64> = if v.iter().find(|x| **x != 0.0).is_some_and(|x| *x < 0.0) {
                v.iter().map(|x| (-x + 0.0).to_bits()).collect()
            } else {
                v.iter().map(|x| (x + 0.0).to_bits()).collect()
            };
            seen.insert(canon)
        })
        .collect()
}

fn check_sigma(p: &SymmetricPolytope, sigma: &[usize]) -> Result<()> {
    if let Some(&i) = sigma.iter().find(|&&i| i >= p.n) {
        return Err(VceError::InvalidInput(format!("coordinate {i} out of range for dimension {}", p.n)));
    }
    if sigma.windows(2).any(|w| w[0] >= w[1]) {
        return Err(VceError::InvalidInput("sigma must be strictly increasing".into()));
    }
    Ok(())
}

/// Whether `y` lies in `P_sigma K` with `1 - gauge(y) >= slack`.
pub fn projected_membership(p: &SymmetricPolytope, sigma: &[usize], y: &[f64], slack: f64) -> Result<bool> {
    check_sigma(p, sigma)?;
    if y.len() != sigma.len() {
        return Err(VceError::LengthMismatch { expected: sigma.len(), got: y.len() });
    }
    if y.iter().all(|v| *v == 0.0) {
        return Ok(slack <= 1.0);
    }
    let cols = project(p, sigma);
    if cols.is_empty() {
        return Ok(false);
    }
    let g = gauge(&cols, y, 1.0 - slack, &Budget::unlimited())?;
    Ok(1.0 - g.value >= slack)
}

/// Vertices checked in cheap-bound order before switching to Gray-code order.
const WEAK_FIRST: usize = 256;

/// Dense LU factors `P B = L U` of a small square matrix.
struct Lu {
    k: usize,
    /// Column-major: entry `(i, j)` at `j * k + i`.
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl Lu {
    fn new(columns: &[Vec<f64>]) -> Option<Self> {
        let k = columns.len();
        let mut lu = Vec::with_capacity(k * k);
        for c in columns {
            lu.extend_from_slice(c);
        }
        let at = |i: usize, j: usize| j * k + i;
        let mut piv: Vec<usize> = (0..k).collect();
        for c in 0..k {
            let p = (c..k).max_by(|&a, &b| lu[at(a, c)].abs().total_cmp(&lu[at(b, c)].abs()).then(b.cmp(&a)))?;
            if lu[at(p, c)].abs() < 1e-11 {
                return None;
            }
            if p != c {
                piv.swap(p, c);
                for j in 0..k {
                    lu.swap(at(p, j), at(c, j));
                }
            }
            for i in c + 1..k {
                let f = lu[at(i, c)] / lu[at(c, c)];
                lu[at(i, c)] = f;
                for j in c + 1..k {
                    lu[at(i, j)] -= f * lu[at(c, j)];
                }
            }
        }
        Some(Lu { k, lu, piv })
    }

    /// `B x = b`.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let k = self.k;
        let at = |i: usize, j: usize| j * k + i;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..k {
            for j in 0..i {
                x[i] -= self.lu[at(i, j)] * x[j];
            }
        }
        for i in (0..k).rev() {
            for j in i + 1..k {
                x[i] -= self.lu[at(i, j)] * x[j];
            }
            x[i] /= self.lu[at(i, i)];
        }
        x
    }

    /// `B^T y = c`.
    fn solve_t(&self, c: &[f64]) -> Vec<f64> {
        let k = self.k;
        let at = |i: usize, j: usize| j * k + i;
        let mut w = c.to_vec();
        for i in 0..k {
            for j in 0..i {
                w[i] -= self.lu[at(j, i)] * w[j];
            }
            w[i] /= self.lu[at(i, i)];
        }
        for i in (0..k).rev() {
            for j in i + 1..k {
                w[i] -= self.lu[at(j, i)] * w[j];
            }
        }
        let mut y = vec![0.0; k];
        for (i, &p) in self.piv.iter().enumerate() {
            y[p] = w[i];
        }
        y
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Basis of the gauge program: column index and sign.
type Basis = Vec<(usize, f64)>;

/// Extends `support` to `k` linearly independent columns.
fn complete_basis(cols: &[Vec<f64>], support: &[usize], k: usize) -> Option<Basis> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut basis = Vec::with_capacity(k);
    for j in support.iter().copied().chain(0..cols.len()) {
        if basis.len() == k {
            break;
        }
        if basis.iter().any(|&(b, _)| b == j) {
            continue;
        }
        let mut v = cols[j].clone();
        for u in &q {
            let d = dot(&v, u);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= d * ui;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-9 {
            q.push(v.into_iter().map(|x| x / norm).collect());
            basis.push((j, 1.0));
        }
    }
    (basis.len() == k).then_some(basis)
}

/// Outcome of the warm-started float gauge program.
enum Warm {
    /// Representation with `|mu|_1 <= value`, checked by its residual.
    Inside { value: f64, basis: Basis },
    /// Dual direction with `<y, z> / h(z) > 1`.
    Outside { z: Vec<f64>, basis: Basis },
    /// Too close to the boundary or numerically unsure.
    Unsure,
}

/// Primal simplex on `min |mu|_1, sum mu_j c_j = y` starting from a basis
/// of an earlier vertex. Signs of the basis columns absorb the signs of
/// `mu`, so any nonsingular basis is feasible.
fn warm_gauge(cols: &[Vec<f64>], y: &[f64], start: &Basis) -> Warm {
    let k = y.len();
    let mut basis = start.clone();
    let mut stall = 0;
    let mut last = f64::INFINITY;
    for _ in 0..2000 {
        let columns: Vec<Vec<f64>> = basis.iter().map(|&(j, s)| cols[j].iter().map(|v| s * v).collect()).collect();
        let Some(lu) = Lu::new(&columns) else {
            return Warm::Unsure;
        };
        let mut x = lu.solve(y);
        if x.iter().any(|v| *v < 0.0) {
            for (i, v) in x.iter_mut().enumerate() {
                if *v < 0.0 {
                    *v = -*v;
                    basis[i].1 = -basis[i].1;
                }
            }
            continue;
        }
        let value: f64 = x.iter().sum();
        let pi = lu.solve_t(&vec![1.0; k]);
        let scores: Vec<f64> = cols.iter().map(|c| dot(c, &pi)).collect();
        let h = scores.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if value < last - 1e-14 {
            stall = 0;
            last = value;
        } else {
            stall += 1;
        }
        let entering = if stall > 50 {
            scores.iter().position(|sc| sc.abs() > 1.0 + 1e-10)
        } else if h > 1.0 + 1e-10 {
            scores.iter().position(|sc| sc.abs() == h)
        } else {
            None
        };
        let Some(q) = entering else {
            // optimal: certify from both sides
            let residual = (0..k)
                .map(|i| (columns.iter().zip(&x).map(|(c, m)| c[i] * m).sum::<f64>() - y[i]).abs())
                .fold(0.0, f64::max);
            if residual > 1e-10 {
                return Warm::Unsure;
            }
            if value <= 1.0 - LP_ETA {
                return Warm::Inside { value, basis };
            }
            let hz = support(cols, &pi);
            if hz > 0.0 && dot(y, &pi) / hz > 1.0 + LP_ETA {
                return Warm::Outside { z: pi, basis };
            }
            return Warm::Unsure;
        };
        let sign = scores[q].signum();
        let dir = lu.solve(&cols[q].iter().map(|v| sign * v).collect::<Vec<f64>>());
        let leave = (0..k)
            .filter(|&i| dir[i] > 1e-12)
            .min_by(|&a, &b| (x[a] / dir[a]).total_cmp(&(x[b] / dir[b])).then(basis[a].0.cmp(&basis[b].0)));
        let Some(i) = leave else {
            return Warm::Unsure;
        };
        basis[i] = (q, sign);
    }
    Warm::Unsure
}

/// Cached dual directions: `z` supported on `mask` with `h_K(z) <= 1`.
struct DualCut {
    mask: u64,
    l1: f64,
}

/// A verified cube: every vertex of `r {-1,1}^mask` lies in `P_mask K` for
/// `r <= rmax`.
struct ValidCube {
    mask: u64,
    rmax: f64,
}

/// Exact search for `VC(K, t)` with caches shared across radii.
pub struct ConvexVcSearch<'a> {
    p: &'a SymmetricPolytope,
    cuts: Vec<DualCut>,
    valid: Vec<ValidCube>,
    budget: Budget,
    /// Last optimal basis, a warm start for the next cube of the same size.
    basis: Option<Basis>,
    pub lp_solves: usize,
}

const MAX_CUTS: usize = 8192;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexWitness {
    pub sigma: Vec<usize>,
    /// Smallest `1 - gauge` over the cube vertices.
    pub slack: f64,
}

impl<'a> ConvexVcSearch<'a> {
    pub fn new(p: &'a SymmetricPolytope, budget: Budget) -> Result<Self> {
        if p.n > 64 {
            return Err(VceError::TooLarge(format!("convex VC supports n <= 64, got {}", p.n)));
        }
        Ok(ConvexVcSearch {
            p,
            cuts: Vec::new(),
            valid: Vec::new(),
            budget,
            basis: None,
            lp_solves: 0,
        })
    }

    fn add_cut(&mut self, sigma: &[usize], z: &[f64], cols: &[Vec<f64>]) {
        let h = support(cols, z);
        let l1: f64 = z.iter().map(|v| v.abs()).sum();
        let mask = sigma
            .iter()
            .zip(z)
            .filter(|(_, v)| **v != 0.0)
            .fold(0u64, |m, (&i, _)| m | 1 << i);
        let l1 = if h > 0.0 { l1 / h } else { f64::INFINITY };
        if self.cuts.len() < MAX_CUTS && l1 > 0.0 {
            self.cuts.push(DualCut { mask, l1 });
        }
    }

    /// Some cached dual direction inside `mask` already excludes radius `r`.
    fn cut_off(&self, mask: u64, r: f64) -> bool {
        self.cuts.iter().any(|c| c.mask & !mask == 0 && r * c.l1 > 1.0 + 1e-9)
    }

    /// Slack bound from a verified superset, whose projections are valid
    /// cubes up to the same radius. Requires a margin over the float gauges.
    fn known_valid(&self, mask: u64, r: f64) -> Option<f64> {
        self.valid
            .iter()
            .filter(|v| mask & !v.mask == 0 && r <= v.rmax * (1.0 - LP_ETA))
            .map(|v| 1.0 - r / v.rmax)
            .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.max(s))))
    }

    /// Checks every vertex of `r {-1,1}^sigma`. Returns the minimum slack
    /// when all lie in `P_sigma K`; for a subset of an already verified cube
    /// the slack is a lower bound.
    pub fn verify(&mut self, sigma: &[usize], r: f64) -> Result<Option<f64>> {
        let k = sigma.len();
        if k == 0 {
            return Ok(Some(1.0));
        }
        let mask = sigma.iter().fold(0u64, |m, &i| m | 1 << i);
        if let Some(slack) = self.known_valid(mask, r) {
            return Ok(Some(slack));
        }
        if self.cut_off(mask, r) {
            return Ok(None);
        }
        let cols = project(self.p, sigma);
        let radius = cols.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
        if r * (k as f64).sqrt() > radius * (1.0 + 1e-12) {
            return Ok(None);
        }
        if k >= 40 {
            return Err(VceError::TooLarge(format!("{k}-dimensional cube has too many vertices")));
        }
        let half = 1u64 << (k - 1);
        let sign = |mask: u64| -> Vec<f64> {
            (0..k).map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 }).collect()
        };
        // cheap pass: the sign vector itself as a dual direction
        let mut order = Vec::with_capacity(half as usize);
        for e in 0..half {
            let eps = sign(e);
            let h = support(&cols, &eps);
            if r * k as f64 > h * (1.0 + 1e-12) {
                self.add_cut(sigma, &eps, &cols);
                return Ok(None);
            }
            order.push((h, e));
        }
        // vertices with the weakest cheap bound are the likeliest to fail;
        // past those, Gray-code order keeps consecutive programs one sign apart
        let mut weak = order.clone();
        weak.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        weak.truncate(WEAK_FIRST);
        let mut seen = vec![false; half as usize];
        for &(_, e) in &weak {
            seen[e as usize] = true;
        }
        let order: Vec<(f64, u64)> = weak
            .into_iter()
            .chain((0..half).map(|i| i ^ (i >> 1)).filter(|&e| !seen[e as usize]).map(|e| (0.0, e)))
            .collect();
        let mut worst = 0.0f64;
        let mut worst_z = Vec::new();
        let mut warm: Option<Basis> = self.basis.clone().filter(|b| b.len() == k);
        for (step, &(_, e)) in order.iter().enumerate() {
            if step % 64 == 0 {
                self.budget.check("convex cube verification")?;
            }
            let y: Vec<f64> = sign(e).into_iter().map(|s| s * r).collect();
            if let Some(start) = &warm {
                match warm_gauge(&cols, &y, start) {
                    Warm::Inside { value, basis } => {
                        self.basis = Some(basis.clone());
                        warm = Some(basis);
                        worst = worst.max(value);
                        continue;
                    }
                    Warm::Outside { z, basis } => {
                        self.basis = Some(basis);
                        self.add_cut(sigma, &z, &cols);
                        return Ok(None);
                    }
                    Warm::Unsure => {}
                }
            }
            self.lp_solves += 1;
            let g = gauge(&cols, &y, 1.0, &self.budget)?;
            if g.value > 1.0 {
                self.add_cut(sigma, &g.z, &cols);
                return Ok(None);
            }
            if let Some(b) = complete_basis(&cols, &g.support, k) {
                self.basis = Some(b.clone());
                warm = Some(b);
            }
            if g.value > worst {
                worst = g.value;
                worst_z = g.z;
            }
        }
        if !worst_z.is_empty() {
            self.add_cut(sigma, &worst_z, &cols);
        }
        self.valid.push(ValidCube {
            mask,
            rmax: if worst > 0.0 { r / worst } else { f64::INFINITY },
        });
        Ok(Some(1.0 - worst))
    }

    /// Lexicographically first valid `sigma` of size `k` among `coords`.
    fn first_at_level(&mut self, coords: &[usize], k: usize, r: f64, invalid: &mut HashSet<u64>) -> Result<Option<ConvexWitness>> {
        let mut cur: Vec<usize> = Vec::with_capacity(k);
        self.dfs(coords, 0, k, r, &mut cur, invalid)
    }

    fn dfs(
        &mut self,
        coords: &[usize],
        start: usize,
        k: usize,
        r: f64,
        cur: &mut Vec<usize>,
        invalid: &mut HashSet<u64>,
    ) -> Result<Option<ConvexWitness>> {
        let mask = cur.iter().fold(0u64, |m, &i| m | 1 << i);
        if !cur.is_empty() && (invalid.contains(&mask) || self.cut_off(mask, r)) {
            return Ok(None);
        }
        if cur.len() == k {
            // every (k-1)-subset must not be known invalid
            if cur.iter().any(|&i| invalid.contains(&(mask & !(1 << i)))) {
                invalid.insert(mask);
                return Ok(None);
            }
            return match self.verify(cur, r)? {
                Some(slack) => Ok(Some(ConvexWitness {
                    sigma: cur.clone(),
                    slack,
                })),
                None => {
                    invalid.insert(mask);
                    Ok(None)
                }
            };
        }
        for idx in start..coords.len() {
            if coords.len() - idx < k - cur.len() {
                break;
            }
            cur.push(coords[idx]);
            let found = self.dfs(coords, idx + 1, k, r, cur, invalid)?;
            cur.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }

    fn coords_for(&self, r: f64) -> Vec<usize> {
        (0..self.p.n)
            .filter(|&i| r <= self.p.generators.iter().map(|v| v[i].abs()).fold(0.0, f64::max))
            .collect()
    }

    /// Largest `sigma` with `(t/2) B_inf^sigma ⊆ P_sigma K`, lexicographically
    /// first at that size, searching sizes downward from `upper`.
    pub fn max_cube(&mut self, t: f64, upper: Option<usize>) -> Result<Option<ConvexWitness>> {
        if !(t > 0.0 && t <= 2.0) {
            return Err(VceError::InvalidInput(format!("t = {t} must lie in (0, 2]")));
        }
        let r = t / 2.0;
        let coords = self.coords_for(r);
        let radius = self
            .p
            .generators
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let by_radius = ((radius / r).powi(2) + 1e-9).floor() as usize;
        let top = coords.len().min(by_radius).min(upper.unwrap_or(usize::MAX));
        let mut invalid = HashSet::new();
        for k in (1..=top).rev() {
            if let Some(w) = self.first_at_level(&coords, k, r, &mut invalid)? {
                return Ok(Some(w));
            }
        }
        Ok(None)
    }
}

/// `VC(K, t)` for symmetric `K`: the largest `|sigma|` with every vertex of
/// `(t/2){-1,1}^sigma` in `P_sigma K`. Accepts `t` in `(0, 2]`.
pub fn convex_vc(p: &SymmetricPolytope, t: f64, budget: &Budget) -> Result<VcResult> {
    let mut search = ConvexVcSearch::new(p, budget.clone())?;
    let w = search.max_cube(t, None)?;
    Ok(match w {
        Some(w) => VcResult {
            dimension: w.sigma.len(),
            witness: Some(Cube::new(w.sigma.clone(), vec![(-t / 2.0, t / 2.0); w.sigma.len()])?),
            scale: t,
        },
        None => VcResult {
            dimension: 0,
            witness: None,
            scale: t,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Mean and standard error of per-trial values, summed in trial order.
fn summarize(values: &[f64]) -> MonteCarlo {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    MonteCarlo {
        estimate: mean,
        stderr: (var / n).sqrt(),
        trials: values.len(),
    }
}

/// `E ||g||` for a standard Gaussian `g` in `R^n`. Trial `i` draws from the
/// stream `derive_seed(seed, i)`, so the result does not depend on threads.
pub fn gaussian_mean_norm<F>(norm: F, n: usize, trials: usize, seed: u64) -> Result<MonteCarlo>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if trials < 2 {
        return Err(VceError::InvalidInput("need at least two trials".into()));
    }
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| norm(&Stream::new(derive_seed(seed, i as u64)).gaussian_vec(n)))
        .collect();
    Ok(summarize(&values))
}

/// `M*_K`: average of the support function over the unit sphere.
pub fn sphere_mean_width(p: &SymmetricPolytope, trials: usize, seed: u64) -> Result<MonteCarlo> {
    if trials < 2 {
        return Err(VceError::InvalidInput("need at least two trials".into()));
    }
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| support(&p.generators, &Stream::new(derive_seed(seed, i as u64)).sphere(p.n)))
        .collect();
    Ok(summarize(&values))
}

/// `int_cutoff^upper sqrt(entropy(t)) dt` by adaptive Simpson quadrature
/// with relative tolerance `1e-6`.
pub fn dudley_bound<F: Fn(f64) -> f64>(entropy: F, cutoff: f64, upper: f64) -> Result<f64> {
    if !(cutoff < upper) {
        return Ok(0.0);
    }
    let f = |t: f64| -> Result<f64> {
        let e = entropy(t);
        if !e.is_finite() {
            return Err(VceError::Numerical(format!("entropy is not finite at t = {t}")));
        }
        Ok(e.max(0.0).sqrt())
    };
    let (a, b) = (cutoff, upper);
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a)?, f(m)?, f(b)?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // absolute target from a coarse composite estimate
    let coarse: f64 = {
        let k = 64;
        let h = (b - a) / k as f64;
        let mut s = 0.0;
        for i in 0..k {
            let x0 = a + i as f64 * h;
            s += h / 6.0 * (f(x0)? + 4.0 * f(x0 + h / 2.0)? + f(x0 + h)?);
        }
        s
    };
    let tol = (1e-6 * coarse.abs()).max(1e-15);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)? + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

pub const MAX_SIGNS: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignMinimum {
    pub value: f64,
    pub signs: Vec<i8>,
}

/// `min ||sum_i eta_i x_i||` over signs with `eta_1 = +1`; ties go to the
/// lexicographically smallest pattern with `+1` before `-1`.
pub fn min_signs_norm<F>(vectors: &[Vec<f64>], norm: F) -> Result<SignMinimum>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let count = vectors.len();
    if count == 0 {
        return Err(VceError::InvalidInput("no vectors given".into()));
    }
    if count > MAX_SIGNS {
        return Err(VceError::TooLarge(format!("sign minimization supports at most {MAX_SIGNS} vectors, got {count}")));
    }
    let d = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != d) {
        return Err(VceError::LengthMismatch { expected: d, got: v.len() });
    }
    // bit (count - 1 - i) of the mask is set when eta_i = -1, so masks
    // ascend in lexicographic order
    let eval = |mask: u64| -> f64 {
        let mut sum = vec![0.0; d];
        for (i, v) in vectors.iter().enumerate() {
            let neg = i > 0 && mask >> (count - 1 - i) & 1 == 1;
            for (s, x) in sum.iter_mut().zip(v) {
                if neg {
                    *s -= x
                } else {
                    *s += x
                }
            }
        }
        norm(&sum)
    };
    let total = 1u64 << (count - 1);
    let (value, mask) = (0..total)
        .into_par_iter()
        .map(|m| (eval(m), m))
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let signs = (0..count)
        .map(|i| if i > 0 && mask >> (count - 1 - i) & 1 == 1 { -1 } else { 1 })
        .collect();
    Ok(SignMinimum { value, signs })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedPair {
    pub t: f64,
    pub sigma: Vec<usize>,
    pub s: f64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EltonCertificate {
    pub sigma: Vec<usize>,
    pub t: f64,
    pub s: f64,
    pub delta_hat: f64,
    pub delta_stderr: f64,
    pub slack: f64,
    pub objective: f64,
    pub exponent: f64,
    /// Largest certified subset for each grid level where one exists.
    pub certified: Vec<CertifiedPair>,
    pub probes: usize,
    pub probe_violations: usize,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EltonOptions {
    pub trials: usize,
    pub seed: u64,
    pub t_grid: Vec<f64>,
    pub exponent: f64,
    pub probes: usize,
}

/// `count` logarithmically spaced points in `[lo, hi]`, ascending.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| if i + 1 == count { hi } else { (a + (b - a) * i as f64 / (count - 1) as f64).exp() })
        .collect()
}

impl Default for EltonOptions {
    fn default() -> Self {
        EltonOptions {
            trials: 10_000,
            seed: 0,
            t_grid: log_grid(0.02, 1.0, 32),
            exponent: 2.1,
            probes: 1000,
        }
    }
}

pub fn elton_objective(s: f64, t: f64, exponent: f64) -> f64 {
    s.sqrt() * t * (2.0 / t).ln().powf(exponent)
}

/// Random points of the `l_1` unit sphere in `R^k`.
fn l1_probe(stream: &mut Stream, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| -(1.0 - stream.uniform()).ln()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| if stream.bernoulli(0.5) { v / total } else { -v / total }).collect()
}

/// Searches a grid of levels for subsets on which the vectors dominate the
/// `l_1` basis, maximizing `sqrt(s) t log^p(2/t)` over certified pairs.
pub fn elton_extract(inst: &NormedInstance, opts: &EltonOptions, budget: &Budget) -> Result<EltonCertificate> {
    if opts.t_grid.is_empty() || opts.t_grid.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(VceError::InvalidInput("t grid must be non-empty and inside (0, 1]".into()));
    }
    let n = inst.n();
    let mc = gaussian_mean_norm(|g| inst.norm(g), n, opts.trials, opts.seed)?;
    let p = inst.polytope();
    let mut search = ConvexVcSearch::new(&p, budget.clone())?;
    let mut grid = opts.t_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut certified: Vec<(CertifiedPair, f64)> = Vec::new();
    let mut upper = None;
    for &t in &grid {
        // VC(K, 2t) is non-increasing in t, so the previous size bounds this one
        match search.max_cube(2.0 * t, upper)? {
            Some(w) => {
                upper = Some(w.sigma.len());
                let s = w.sigma.len() as f64 / n as f64;
                certified.push((
                    CertifiedPair {
                        t,
                        s,
                        objective: elton_objective(s, t, opts.exponent),
                        sigma: w.sigma,
                    },
                    w.slack,
                ));
            }
            None => break,
        }
    }
    // a pair is dominated by a larger certified t at the same size; the
    // objective peaks at t = 2 exp(-p), so it is maximized over the frontier
    let frontier: Vec<usize> = (0..certified.len())
        .filter(|&i| {
            let size = certified[i].0.sigma.len();
            !certified[i + 1..].iter().any(|(c, _)| c.sigma.len() >= size)
        })
        .collect();
    let best = frontier.iter().copied().fold(None::<usize>, |acc, i| match acc {
        Some(b) if certified[b].0.objective >= certified[i].0.objective => acc,
        _ => Some(i),
    });
    let (sigma, t, slack, fallback) = match best {
        Some(b) => (certified[b].0.sigma.clone(), certified[b].0.t, certified[b].1, false),
        None => {
            let (i, h) = (0..n)
                .map(|i| (i, inst.dual_generators.iter().map(|g| g[i].abs()).fold(0.0, f64::max)))
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            if h <= 0.0 {
                return Err(VceError::Precondition("every vector has norm zero".into()));
            }
            (vec![i], h, 0.0, true)
        }
    };
    let s = sigma.len() as f64 / n as f64;
    let mut stream = Stream::new(derive_seed(opts.seed, u64::MAX));
    let mut violations = 0;
    for _ in 0..opts.probes {
        let a = l1_probe(&mut stream, sigma.len());
        let mut x = vec![0.0; n];
        for (&i, v) in sigma.iter().zip(&a) {
            x[i] = *v;
        }
        if inst.norm(&x) < t * (1.0 - 1e-9) {
            violations += 1;
        }
    }
    Ok(EltonCertificate {
        objective: elton_objective(s, t, opts.exponent),
        sigma,
        t,
        s,
        delta_hat: mc.estimate / n as f64,
        delta_stderr: mc.stderr / n as f64,
        slack,
        exponent: opts.exponent,
        certified: certified.into_iter().map(|(c, _)| c).collect(),
        probes: opts.probes,
        probe_violations: violations,
        fallback,
    })
}
