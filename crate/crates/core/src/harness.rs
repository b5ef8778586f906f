//! Seeded instance generators, inequality suites with constant fitting, and
//! JSON verification reports.
//!
//! Each suite draws instances from `derive_seed(seed, index)`, computes both
//! sides of its inequality with the exact solvers where they exist, and fits
//! the unnamed constant as the extreme ratio. When an exact quantity is out of
//! reach the suite substitutes a bound on the side that keeps the fitted
//! constant conservative and says so in `notes`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::convex::{
    convex_vc, elton_extract, gaussian_mean_norm, log_grid, min_signs_norm, sphere_mean_width, ConvexVcSearch, EltonOptions,
    NormedInstance, SymmetricPolytope,
};
use crate::coverings::{covering_number, strict_packing_2t, BallShape, CoverMode, CoverReport, Normalization, Strategy};
use crate::dimensions::{boolean_vc, vc_limit, vc_scaled, Cube};
use crate::empirical::{fat_shattering, inflated_vc, FunctionClassSample};
use crate::error::{Result, VceError};
use crate::extraction::{coordinate_attempt, cube_count_guarantee, extract_cubes, CubeOptions, SetSystem};
use crate::rng::{derive_seed, Stream};
use crate::spaces::{PointSet, QuasiMetric};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteId {
    SauerShelah,
    InProduct,
    InLattice,
    InBinfty,
    ConvexBody,
    BinftyThm,
    LinftyVsL1,
    Dudley,
    TalagrandE,
    EltonFrontier,
    SignComparison,
    FatChain,
    ThmFat,
    Haussler,
}

impl SuiteId {
    pub const ALL: [SuiteId; 14] = [
        SuiteId::SauerShelah,
        SuiteId::InProduct,
        SuiteId::InLattice,
        SuiteId::InBinfty,
        SuiteId::ConvexBody,
        SuiteId::BinftyThm,
        SuiteId::LinftyVsL1,
        SuiteId::Dudley,
        SuiteId::TalagrandE,
        SuiteId::EltonFrontier,
        SuiteId::SignComparison,
        SuiteId::FatChain,
        SuiteId::ThmFat,
        SuiteId::Haussler,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteId::SauerShelah => "sauer_shelah",
            SuiteId::InProduct => "in_product",
            SuiteId::InLattice => "in_lattice",
            SuiteId::InBinfty => "in_binfty",
            SuiteId::ConvexBody => "convex_body",
            SuiteId::BinftyThm => "binfty_thm",
            SuiteId::LinftyVsL1 => "linfty_vs_l1",
            SuiteId::Dudley => "dudley",
            SuiteId::TalagrandE => "talagrand_E",
            SuiteId::EltonFrontier => "elton_frontier",
            SuiteId::SignComparison => "sign_comparison",
            SuiteId::FatChain => "fat_chain",
            SuiteId::ThmFat => "thm_fat",
            SuiteId::Haussler => "haussler",
        }
    }

    /// Suites whose lhs/rhs are compared through a fitted constant that
    /// bounds from above (`lhs <= C rhs`) rather than below.
    fn fit(self) -> Fit {
        match self {
            SuiteId::EltonFrontier => Fit::Lower,
            _ => Fit::Upper,
        }
    }

    /// Whether the inequality holds with constant 1 as stated.
    fn constant_free(self) -> bool {
        matches!(self, SuiteId::SauerShelah | SuiteId::FatChain)
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteId {
    type Err = VceError;

    /// Accepts `snake_case` or `kebab-case`, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        SuiteId::ALL
            .into_iter()
            .find(|id| id.name().to_ascii_lowercase() == key)
            .ok_or_else(|| {
                let names: Vec<&str> = SuiteId::ALL.iter().map(|id| id.name()).collect();
                VceError::InvalidInput(format!("unknown suite {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fit {
    /// `lhs <= C rhs`; the fit is the maximum ratio.
    Upper,
    /// `lhs >= c rhs`; the fit is the minimum ratio.
    Lower,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub suite: SuiteId,
    pub trials: usize,
    pub seed: u64,
    /// Inclusive range for the dimension `n`.
    pub n: (usize, usize),
    /// Inclusive range for `|A|`, generator counts or `m`, per suite.
    pub size: (usize, usize),
    /// Inclusive range for `|T|`.
    pub alphabet: (usize, usize),
    pub t_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    /// Monte Carlo trials inside one instance.
    pub mc_trials: usize,
    /// Per-instance time cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_budget_ms: Option<u64>,
}

impl SuiteConfig {
    pub fn new(suite: SuiteId, trials: usize, seed: u64) -> Self {
        let base = SuiteConfig {
            suite,
            trials,
            seed,
            n: (2, 8),
            size: (2, 40),
            alphabet: (2, 4),
            t_grid: vec![0.5],
            eps_grid: vec![0.25],
            mc_trials: 2000,
            instance_budget_ms: None,
        };
        match suite {
            SuiteId::SauerShelah => SuiteConfig {
                n: (1, 12),
                size: (1, 256),
                ..base
            },
            SuiteId::InProduct => SuiteConfig {
                n: (4, 12),
                size: (4, 64),
                eps_grid: vec![0.25, 0.5],
                ..base
            },
            SuiteId::InLattice => SuiteConfig {
                n: (4, 10),
                size: (4, 48),
                alphabet: (2, 6),
                eps_grid: vec![0.25, 0.5],
                ..base
            },
            SuiteId::InBinfty | SuiteId::LinftyVsL1 => SuiteConfig {
                n: (2, 6),
                size: (4, 24),
                t_grid: vec![0.5, 0.8],
                ..base
            },
            SuiteId::ConvexBody => SuiteConfig {
                n: (2, 5),
                size: (2, 6),
                t_grid: vec![0.5, 0.8],
                ..base
            },
            SuiteId::BinftyThm => SuiteConfig {
                n: (2, 6),
                size: (2, 6),
                t_grid: vec![0.25, 0.5],
                ..base
            },
            SuiteId::Dudley => SuiteConfig {
                n: (2, 4),
                size: (2, 6),
                ..base
            },
            SuiteId::TalagrandE => SuiteConfig {
                n: (2, 6),
                size: (2, 6),
                ..base
            },
            SuiteId::EltonFrontier => SuiteConfig {
                n: (3, 8),
                size: (1, 3),
                ..base
            },
            SuiteId::SignComparison => SuiteConfig {
                n: (4, 10),
                size: (1, 2),
                ..base
            },
            SuiteId::FatChain | SuiteId::ThmFat => SuiteConfig {
                t_grid: vec![0.25, 0.5, 0.75],
                ..base
            },
            SuiteId::Haussler => SuiteConfig {
                eps_grid: vec![0.3, 0.5, 0.7],
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(VceError::InvalidInput("trials must be at least 1".into()));
        }
        for (name, (lo, hi)) in [("n", self.n), ("size", self.size), ("alphabet", self.alphabet)] {
            if lo == 0 || lo > hi {
                return Err(VceError::InvalidInput(format!("{name} range ({lo}, {hi}) is empty or starts at 0")));
            }
        }
        let max_n = match self.suite {
            SuiteId::SauerShelah | SuiteId::InProduct | SuiteId::InLattice => 16,
            SuiteId::Dudley | SuiteId::ConvexBody => 6,
            SuiteId::SignComparison => 16,
            _ => 10,
        };
        if self.n.1 > max_n {
            return Err(VceError::InvalidInput(format!(
                "suite {} supports n <= {max_n}, got {}",
                self.suite, self.n.1
            )));
        }
        if matches!(self.suite, SuiteId::FatChain | SuiteId::ThmFat | SuiteId::Haussler) && self.size.1 > 64 {
            return Err(VceError::InvalidInput("function classes are limited to 64 rows".into()));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(VceError::InvalidInput("t grid must be non-empty and inside (0, 1)".into()));
        }
        if self.eps_grid.is_empty() || self.eps_grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(VceError::InvalidInput("eps grid must be non-empty and inside (0, 1)".into()));
        }
        if self.mc_trials < 2 {
            return Err(VceError::InvalidInput("mc_trials must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub index: usize,
    pub seed: u64,
    pub instance: String,
    pub lhs: f64,
    pub rhs_shape: f64,
    /// `lhs / rhs_shape`; absent when the shape vanishes.
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
}

impl Record {
    fn new(index: usize, seed: u64, instance: String, lhs: f64, rhs_shape: f64) -> Self {
        Record {
            index,
            seed,
            instance,
            lhs,
            rhs_shape,
            ratio: (rhs_shape > 0.0).then(|| lhs / rhs_shape),
            values: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_string(), v);
        self
    }

    /// A vanishing shape with positive lhs defeats every constant.
    fn degenerate(&self) -> bool {
        self.ratio.is_none() && self.lhs > 0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckCount {
    pub checks: usize,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub suite_id: SuiteId,
    pub seed: u64,
    pub config: SuiteConfig,
    pub fit: Fit,
    pub records: Vec<Record>,
    pub skipped: usize,
    pub fitted_constants: BTreeMap<String, f64>,
    /// Records exceeding the fitted constant; only degenerate shapes count.
    pub violations: usize,
    /// Violations of the inequality with constant 1, for suites where it
    /// holds as stated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violations_at_one: Option<usize>,
    pub max_ratio: Option<f64>,
    pub argmax: Option<String>,
    /// Constant-free side checks (sandwiches, chains, guarantees).
    pub checks: BTreeMap<String, CheckCount>,
    pub notes: Vec<String>,
    pub timing: Timing,
}

/// `max lhs / rhs_shape`.
pub fn fit_constant(records: &[(f64, f64)]) -> Result<f64> {
    fold_ratios(records, f64::max)
}

/// `min lhs / rhs_shape`, for lower-bound inequalities.
pub fn fit_lower_constant(records: &[(f64, f64)]) -> Result<f64> {
    fold_ratios(records, f64::min)
}

fn fold_ratios(records: &[(f64, f64)], pick: fn(f64, f64) -> f64) -> Result<f64> {
    let (first, rest) = records
        .split_first()
        .ok_or_else(|| VceError::InvalidInput("no records to fit".into()))?;
    let ratio = |&(lhs, shape): &(f64, f64)| -> Result<f64> {
        if !(shape > 0.0) {
            return Err(VceError::InvalidInput(format!("rhs shape {shape} must be positive")));
        }
        Ok(lhs / shape)
    };
    rest.iter().try_fold(ratio(first)?, |acc, r| Ok(pick(acc, ratio(r)?)))
}

struct Outcome {
    records: Vec<Record>,
    checks: Vec<(&'static str, bool)>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            records: Vec::new(),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, name: &'static str, ok: bool) {
        self.checks.push((name, ok));
    }
}

fn pick_range(s: &mut Stream, (lo, hi): (usize, usize)) -> usize {
    lo + s.below(hi - lo + 1)
}

// ---------------------------------------------------------------- generators

/// Distinct uniform rows of `{0,1}^n`; `size` is capped at `2^n`.
pub fn random_boolean_set(s: &mut Stream, n: usize, size: usize) -> PointSet {
    let cap = if n >= 20 { usize::MAX } else { 1usize << n };
    let target = size.min(cap);
    let mut seen = BTreeSet::new();
    let mut rows = Vec::with_capacity(target);
    while rows.len() < target {
        let row: Vec<u8> = (0..n).map(|_| s.bernoulli(0.5) as u8).collect();
        if seen.insert(row.clone()) {
            rows.push(row);
        }
    }
    PointSet::boolean(rows).expect("boolean rows")
}

/// Greedy rejection sampling over uniform draws from `{0, ..., p-1}^n`: a
/// draw is kept when it is separated (`d >= level`, or `> 0` at level 0)
/// from every kept point on at least `min_coords` coordinates.
pub fn separated_set(
    s: &mut Stream,
    p: usize,
    n: usize,
    metric: &QuasiMetric,
    level: f64,
    min_coords: usize,
    target: usize,
    tries: usize,
) -> PointSet {
    let mut kept: Vec<Vec<usize>> = Vec::new();
    for _ in 0..tries {
        if kept.len() >= target {
            break;
        }
        let cand: Vec<usize> = (0..n).map(|_| s.below(p)).collect();
        let ok = kept.iter().all(|x| {
            let count = x
                .iter()
                .zip(&cand)
                .filter(|(a, b)| crate::spaces::separated_at(metric.distance(**a as f64, **b as f64), level))
                .count();
            count >= min_coords.max(1)
        });
        if ok {
            kept.push(cand);
        }
    }
    PointSet::finite(p, kept).expect("alphabet entries")
}

/// Gaussian generators scaled so the largest entry has modulus one, which
/// puts `K` inside `B_inf^n` and makes `K` touch its boundary.
pub fn random_polytope(s: &mut Stream, n: usize, count: usize) -> SymmetricPolytope {
    let mut gens: Vec<Vec<f64>> = (0..count.max(1)).map(|_| s.gaussian_vec(n)).collect();
    let max = gens.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    for g in &mut gens {
        for v in g.iter_mut() {
            *v /= max;
        }
    }
    SymmetricPolytope::new(n, gens).expect("generators in range")
}

/// Points of `K = conv(+-v_j)`: the generators, their negatives, and random
/// convex combinations with random signs.
pub fn sample_body(s: &mut Stream, p: &SymmetricPolytope, count: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    for g in &p.generators {
        out.push(g.clone());
        out.push(g.iter().map(|v| -v).collect());
    }
    while out.len() < count {
        let w: Vec<f64> = p.generators.iter().map(|_| -(1.0 - s.uniform()).ln()).collect();
        let total: f64 = w.iter().sum();
        let mut x = vec![0.0; p.n];
        for (g, wi) in p.generators.iter().zip(&w) {
            let sign = if s.bernoulli(0.5) { 1.0 } else { -1.0 };
            for (xi, gi) in x.iter_mut().zip(g) {
                *xi += sign * wi / total * gi;
            }
        }
        out.push(x);
    }
    out.truncate(count.max(2));
    out
}

/// Clipped Gaussian-mixture rows in `[-1, 1]^n`. With `lattice = Some(h)`
/// values are rounded to multiples of `h`.
pub fn random_class(s: &mut Stream, m: usize, n: usize, lattice: Option<f64>) -> FunctionClassSample {
    let k = 1 + s.below(4);
    let centers: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| s.uniform_in(-1.0, 1.0)).collect()).collect();
    let spread = s.uniform_in(0.2, 0.8);
    let values = (0..m.max(1))
        .map(|_| {
            let c = &centers[s.below(k)];
            c.iter()
                .map(|&ci| {
                    let v = (ci + spread * s.gaussian()).clamp(-1.0, 1.0);
                    match lattice {
                        Some(h) => ((v / h).round() * h).clamp(-1.0, 1.0),
                        None => v,
                    }
                })
                .collect()
        })
        .collect();
    FunctionClassSample::new(values).expect("clipped rows")
}

/// Distinct Boolean rows, at least two when `n >= 1`.
pub fn random_boolean_class(s: &mut Stream, m: usize, n: usize) -> FunctionClassSample {
    let a = random_boolean_set(s, n, m.max(2));
    FunctionClassSample::new(a.points).expect("boolean rows")
}

/// Dual functionals with Gaussian entries scaled so every `e_i` has norm at
/// most one, plus the coordinate functionals to keep the norm definite.
pub fn random_normed_instance(s: &mut Stream, n: usize, extra: usize) -> NormedInstance {
    let mut gens: Vec<Vec<f64>> = (0..extra).map(|_| s.gaussian_vec(n)).collect();
    let max = gens.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    for g in &mut gens {
        for v in g.iter_mut() {
            *v /= max;
        }
    }
    let scale = s.uniform_in(0.3, 1.0);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = scale;
        gens.push(e);
    }
    NormedInstance::new(gens).expect("entries in [-1, 1]")
}

// ------------------------------------------------------------ shared helpers

fn budget(cfg: &SuiteConfig) -> Budget {
    Budget::from_option(cfg.instance_budget_ms)
}

/// Independent re-check that every vertex of `cube` occurs in `a`.
pub fn cube_embeds_naive(cube: &Cube, a: &PointSet) -> bool {
    let k = cube.sigma.len();
    let seen: HashSet<Vec<u64>> = a
        .points
        .iter()
        .map(|p| cube.sigma.iter().map(|&c| p[c].to_bits()).collect())
        .collect();
    (0..1u64 << k).all(|mask| {
        let v: Vec<u64> = cube
            .pairs
            .iter()
            .enumerate()
            .map(|(j, &(lo, hi))| if mask >> j & 1 == 1 { hi.to_bits() } else { lo.to_bits() })
            .collect();
        seen.contains(&v)
    })
}

fn sandwich(out: &mut Outcome, r: &CoverReport) {
    if let Some(exact) = &r.exact {
        out.check("sandwich", r.lower.value <= exact.value && exact.value <= r.upper.value);
    }
}

/// Exact cover count when available, else the greedy upper bound.
fn cover_value(r: &CoverReport) -> (usize, bool) {
    match &r.exact {
        Some(e) => (e.value, true),
        None => (r.upper.value, false),
    }
}

fn ln(x: f64) -> f64 {
    x.ln()
}

fn binomial_sum(n: usize, v: usize) -> f64 {
    let mut total = 0.0;
    let mut c = 1.0f64;
    for k in 0..=v.min(n) {
        if k > 0 {
            c = c * (n - k + 1) as f64 / k as f64;
        }
        total += c;
    }
    total
}

/// Support function `h_K(x) = max_j |<v_j, x>|`, the norm of `K°`.
fn support(p: &SymmetricPolytope, x: &[f64]) -> f64 {
    p.generators
        .iter()
        .map(|v| v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

// ------------------------------------------------------------------- suites

fn run_instance(cfg: &SuiteConfig, index: usize) -> Result<Outcome> {
    let seed = derive_seed(cfg.seed, index as u64);
    let mut s = Stream::new(seed);
    let b = budget(cfg);
    let mut out = Outcome::new();
    match cfg.suite {
        SuiteId::SauerShelah => {
            let n = pick_range(&mut s, cfg.n);
            let size = pick_range(&mut s, cfg.size);
            let a = random_boolean_set(&mut s, n, size);
            let v = boolean_vc(&a, &b)?.dimension;
            let bound = binomial_sum(n, v);
            out.check("sauer_shelah", a.len() as f64 <= bound);
            out.records.push(
                Record::new(index, seed, format!("n={n} |A|={} vc={v}", a.len()), a.len() as f64, bound)
                    .with("alpha", ln(a.len() as f64) / n as f64)
                    .with("vc", v as f64),
            );
        }
        SuiteId::InProduct => {
            let n = pick_range(&mut s, cfg.n);
            let p = pick_range(&mut s, cfg.alphabet);
            let eps = cfg.eps_grid[s.below(cfg.eps_grid.len())];
            let target = pick_range(&mut s, cfg.size);
            let metric = QuasiMetric::zero_one();
            let need = (eps * n as f64 - 1e-9).ceil() as usize;
            let a = separated_set(&mut s, p, n, &metric, 0.0, need, target, 40 * target);
            let vc = vc_limit(&a, &metric, &b)?.dimension;
            let eps_eff = eps.min(0.5);
            let fam = extract_cubes(&a, &metric, eps_eff, CubeOptions {
                seed,
                ..CubeOptions::default()
            });
            match fam {
                Ok(rep) => {
                    let count = rep.output.cubes.len();
                    out.check("cube_count", count as f64 >= cube_count_guarantee(a.len(), p, eps_eff));
                    out.check(
                        "cube_embeds",
                        rep.output
                            .cubes
                            .iter()
                            .all(|c| cube_embeds_naive(c, &a) && c.is_large(&metric, 0.0)),
                    );
                    out.check("cube_within_vc", rep.output.max_dimension <= vc);
                }
                Err(e) if e.is_budget() => return Err(e),
                Err(VceError::TooLarge(_)) => {}
                Err(e) => return Err(e),
            }
            let shape = BallShape::hamming(metric.clone());
            let report = covering_number(&a, &shape, eps / 2.0, true, CoverMode::Exact, &b)?;
            sandwich(&mut out, &report);
            let lhs = ln(a.len() as f64);
            let rhs = ln(p as f64 / eps).powi(2) * vc as f64;
            out.records.push(
                Record::new(index, seed, format!("n={n} |T|={p} eps={eps} |A|={} vc={vc}", a.len()), lhs, rhs)
                    .with("alpha", lhs / n as f64)
                    .with("vc", vc as f64),
            );
        }
        SuiteId::InLattice => {
            let n = pick_range(&mut s, cfg.n);
            let p = pick_range(&mut s, cfg.alphabet).max(2);
            let q = 1 + s.below(p - 1);
            let eps = cfg.eps_grid[s.below(cfg.eps_grid.len())];
            let target = pick_range(&mut s, cfg.size);
            let metric = QuasiMetric::absolute();
            let need = (eps * n as f64 - 1e-9).ceil() as usize;
            let a = separated_set(&mut s, p, n, &metric, q as f64, need, target, 40 * target);
            let vc = vc_scaled(&a, &metric, q as f64, &b)?.dimension;
            let lhs = ln(a.len() as f64);
            let rhs = ln(p as f64 / eps).powi(2) * vc as f64;
            out.records.push(
                Record::new(index, seed, format!("n={n} p={p} q={q} eps={eps} |A|={} vc={vc}", a.len()), lhs, rhs)
                    .with("alpha", lhs / n as f64)
                    .with("vc", vc as f64),
            );
        }
        SuiteId::InBinfty => {
            let n = pick_range(&mut s, cfg.n);
            let m = pick_range(&mut s, cfg.size);
            let t = cfg.t_grid[s.below(cfg.t_grid.len())];
            let eps = t / 4.0;
            let f = random_class(&mut s, m, n, None);
            let a = f.as_point_set()?;
            let report = covering_number(&a, &BallShape::empirical_l2(), t, true, CoverMode::Exact, &b)?;
            sandwich(&mut out, &report);
            let (cover, _) = cover_value(&report);
            let vc = inflated_vc(&f, eps, t / 2.0, &b)?.dimension;
            let lhs = ln(cover as f64);
            let rhs = ln(2.0 / (t * eps)).powi(2) * vc as f64;
            out.records.push(
                Record::new(index, seed, format!("n={n} |A|={m} t={t} eps={eps} vc={vc}"), lhs, rhs).with("cover", cover as f64),
            );
        }
        SuiteId::ConvexBody => {
            let n = pick_range(&mut s, cfg.n);
            let gens = pick_range(&mut s, cfg.size);
            let t = cfg.t_grid[s.below(cfg.t_grid.len())];
            let k = random_polytope(&mut s, n, gens);
            let pts = PointSet::interval(sample_body(&mut s, &k, 40))?;
            let packing = strict_packing_2t(&pts, &BallShape::empirical_l2(), t, Strategy::Exact, &b)?;
            let vc = convex_vc(&k, t / 4.0, &b)?.dimension;
            let lhs = ln(packing as f64);
            let rhs = ln(2.0 / t).powi(2) * vc as f64;
            out.records.push(Record::new(index, seed, format!("n={n} gens={gens} t={t} vc={vc}"), lhs, rhs));
        }
        SuiteId::BinftyThm => {
            let n = pick_range(&mut s, cfg.n);
            let gens = pick_range(&mut s, cfg.size);
            let t = cfg.t_grid[s.below(cfg.t_grid.len())];
            let k = random_polytope(&mut s, n, gens);
            let pts = PointSet::interval(sample_body(&mut s, &k, 32))?;
            let report = covering_number(&pts, &BallShape::linf(), t, false, CoverMode::Exact, &b)?;
            sandwich(&mut out, &report);
            let (cover, _) = cover_value(&report);
            let v = convex_vc(&k, t / 8.0, &b)?.dimension;
            let lhs = ln(cover as f64);
            let rhs = if v == 0 {
                0.0
            } else {
                v as f64 * ln(n as f64 / (t * v as f64)).powi(2)
            };
            out.records.push(Record::new(index, seed, format!("n={n} gens={gens} t={t} v={v}"), lhs, rhs).with("cover", cover as f64));
        }
        SuiteId::LinftyVsL1 => {
            let n = pick_range(&mut s, cfg.n);
            let m = pick_range(&mut s, cfg.size);
            let t = cfg.t_grid[s.below(cfg.t_grid.len())];
            let eps = t / 10.0;
            let f = random_class(&mut s, m, n, None);
            let a = f.as_point_set()?;
            let inf = covering_number(&a, &BallShape::linf(), t, false, CoverMode::Exact, &b)?;
            sandwich(&mut out, &inf);
            let (n_inf, _) = cover_value(&inf);
            let l1 = BallShape::lp(1.0, Normalization::NTo1OverP);
            let n_one = strict_packing_2t(&a, &l1, eps, Strategy::Exact, &b)?.max(1);
            // C >= eps exp((log N_inf - log N_1) t / (2 eps n))
            let lhs = eps * ((ln(n_inf as f64) - ln(n_one as f64)) * t / (2.0 * eps * n as f64)).exp();
            out.records.push(
                Record::new(index, seed, format!("n={n} |A|={m} t={t} eps={eps}"), lhs, 1.0)
                    .with("n_inf", n_inf as f64)
                    .with("n_one_lower", n_one as f64),
            );
        }
        SuiteId::Dudley => {
            let n = pick_range(&mut s, cfg.n);
            let gens = pick_range(&mut s, cfg.size);
            let k = random_polytope(&mut s, n, gens);
            let pts = PointSet::interval(sample_body(&mut s, &k, 48))?;
            let ell = gaussian_mean_norm(|g| support(&k, g), n, cfg.mc_trials, derive_seed(seed, 1))?;
            let mstar = sphere_mean_width(&k, cfg.mc_trials, derive_seed(seed, 2))?;
            let shape = BallShape::lp(2.0, Normalization::Unit);
            let radius = k
                .generators
                .iter()
                .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            let packing = |e: f64| strict_packing_2t(&pts, &shape, e, Strategy::Greedy, &b).map(|p| p.max(1));
            for e in [0.1, 0.2, 0.4] {
                let bound = (1.0 + 2.0 * (mstar.estimate + 3.0 * mstar.stderr) / e).powi(n as i32);
                out.check("volumetric", packing(e)? as f64 <= bound);
            }
            let cutoff = 0.5 * mstar.estimate;
            let integral = crate::convex::dudley_bound(|e| packing(e).map_or(f64::NAN, |p| ln(p as f64)), cutoff, radius.max(cutoff))?;
            out.records.push(
                Record::new(index, seed, format!("n={n} gens={gens}"), ell.estimate, integral)
                    .with("mstar", mstar.estimate)
                    .with("ell_stderr", ell.stderr),
            );
        }
        SuiteId::TalagrandE => {
            let n = pick_range(&mut s, cfg.n);
            let gens = pick_range(&mut s, cfg.size);
            let k = random_polytope(&mut s, n, gens);
            let e = gaussian_mean_norm(|g| support(&k, g), n, cfg.mc_trials, derive_seed(seed, 1))?;
            let cutoff = e.estimate / n as f64;
            let mut search = ConvexVcSearch::new(&k, b)?;
            let grid = log_grid(cutoff.min(0.99), 1.0, 24);
            // lower Riemann sum: both factors are non-increasing in t
            let mut sum = 0.0;
            let mut upper = None;
            for w in grid.windows(2) {
                let v = search.max_cube(w[1], upper)?.map_or(0, |c| c.sigma.len());
                upper = Some(v);
                sum += (w[1] - w[0]) * (v as f64).sqrt() * ln(2.0 / w[1]);
            }
            let rhs = (n as f64).sqrt() * sum;
            out.records.push(
                Record::new(index, seed, format!("n={n} gens={gens}"), e.estimate, rhs)
                    .with("cutoff", cutoff)
                    .with("e_stderr", e.stderr),
            );
        }
        SuiteId::EltonFrontier => {
            let n = pick_range(&mut s, cfg.n);
            let extra = n * pick_range(&mut s, cfg.size);
            let inst = random_normed_instance(&mut s, n, extra);
            let opts = EltonOptions {
                trials: cfg.mc_trials,
                seed: derive_seed(seed, 1),
                t_grid: log_grid(0.02, 1.0, 16),
                probes: 1000,
                ..EltonOptions::default()
            };
            let c = elton_extract(&inst, &opts, &b)?;
            out.check("probes", c.probe_violations == 0);
            out.records.push(
                Record::new(index, seed, format!("n={n} functionals={}", inst.dual_generators.len()), c.objective, c.delta_hat)
                    .with("s", c.s)
                    .with("t", c.t)
                    .with("delta_stderr", c.delta_stderr),
            );
        }
        SuiteId::SignComparison => {
            let n = pick_range(&mut s, cfg.n);
            let extra = n * pick_range(&mut s, cfg.size);
            let inst = random_normed_instance(&mut s, n, extra);
            let k = 3.min(n);
            let lambda = k as f64 / n as f64;
            let mut m = 0.0f64;
            for size in 1..=k {
                for sigma in combinations(n, size) {
                    let vecs: Vec<Vec<f64>> = sigma
                        .iter()
                        .map(|&i| {
                            let mut e = vec![0.0; n];
                            e[i] = 1.0;
                            e
                        })
                        .collect();
                    let v = min_signs_norm(&vecs, |x| inst.norm(x))?.value;
                    m = m.max(v / (size as f64).sqrt());
                }
            }
            let g = gaussian_mean_norm(|x| inst.norm(x), n, cfg.mc_trials, derive_seed(seed, 1))?;
            let rhs = m * (n as f64 / lambda).sqrt();
            let pre = m > 0.0 && lambda < ln(n as f64 / (m * m)).powi(-4) && n as f64 > m * m;
            out.records.push(
                Record::new(index, seed, format!("n={n} lambda={lambda:.4}"), g.estimate, rhs)
                    .with("m", m)
                    .with("hypothesis_range", pre as u8 as f64),
            );
        }
        SuiteId::FatChain => {
            let n = pick_range(&mut s, cfg.n);
            let m = pick_range(&mut s, cfg.size);
            let t = cfg.t_grid[s.below(cfg.t_grid.len())];
            let f = random_class(&mut s, m, n, None);
            let v = inflated_vc(&f, t / 8.0, t / 2.0, &b)?.dimension;
            let fat = fat_shattering(&f, t / 8.0, &b)?.dimension;
            out.check("vc_fat_chain", v <= fat);
            out.records.push(Record::new(index, seed, format!("n={n} m={m} t={t}"), v as f64, fat as f64));
        }
        SuiteId::ThmFat => {
            let n = pick_range(&mut s, cfg.n);
            let m = pick_range(&mut s, cfg.size);
            let t = cfg.t_grid[s.below(cfg.t_grid.len())];
            let f = random_class(&mut s, m, n, None);
            let a = f.as_point_set()?;
            let report = covering_number(&a, &BallShape::empirical_l2(), t, true, CoverMode::Exact, &b)?;
            sandwich(&mut out, &report);
            let (cover, _) = cover_value(&report);
            let fat = fat_shattering(&f, t / 8.0, &b)?.dimension;
            let v = inflated_vc(&f, t / 8.0, t / 2.0, &b)?.dimension;
            out.check("vc_fat_chain", v <= fat);
            let small = t / 32.0;
            let lower = covering_number(&a, &BallShape::empirical_l2(), small, true, CoverMode::LowerBound, &b)?.lower.value;
            let fat_big = fat_shattering(&f, 16.0 * small, &b)?.dimension;
            let lhs = ln(cover as f64);
            let rhs = fat as f64 * ln(2.0 / t).powi(2);
            out.records.push(
                Record::new(index, seed, format!("n={n} m={m} t={t} fat={fat}"), lhs, rhs)
                    .with("fat", fat as f64)
                    .with("log_cover_lower_small", ln(lower as f64))
                    .with("fat_16_small", fat_big as f64),
            );
        }
        SuiteId::Haussler => {
            let n = pick_range(&mut s, cfg.n);
            let m = pick_range(&mut s, cfg.size);
            let eps = cfg.eps_grid[s.below(cfg.eps_grid.len())];
            let f = random_boolean_class(&mut s, m, n);
            let a = f.as_point_set()?;
            let report = covering_number(&a, &BallShape::empirical_l2(), eps, true, CoverMode::Exact, &b)?;
            sandwich(&mut out, &report);
            let (cover, _) = cover_value(&report);
            let bool_set = PointSet::boolean(f.values.iter().map(|r| r.iter().map(|&v| v as u8).collect()).collect())?;
            let d = boolean_vc(&bool_set, &b)?.dimension;
            let di = d as i32;
            let rhs = d as f64 * (4.0 * std::f64::consts::E).powi(di) * eps.powi(-2 * di);
            out.records.push(Record::new(index, seed, format!("n={n} m={} eps={eps} d={d}", f.len()), cover as f64, rhs));
        }
    }
    // closed-form suites never poll the budget inside
    b.check("suite instance")?;
    Ok(out)
}

/// Subsets of `0..n` of the given size in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, k, 0, &mut cur, &mut out);
    out
}

fn notes(suite: SuiteId) -> Vec<String> {
    let v: &[&str] = match suite {
        SuiteId::SauerShelah => &["lhs = |A|, rhs = sum_{k<=v} C(n,k) with exact v; holds with constant 1"],
        SuiteId::InProduct => &[
            "instances are separated on at least eps n coordinates, so N(A, d_n, eps) <= |A|",
            "lhs = ln|A|, rhs = ln^2(|T|/eps) VC(A), VC exact",
            "cube extraction count and embedding are checked per instance",
        ],
        SuiteId::InLattice => &["lhs = ln|A|, rhs = ln^2(p/eps) VC(A, q), VC exact"],
        SuiteId::InBinfty => &[
            "lhs uses the exact cover with centers in A, which is >= N: direction safe",
            "rhs uses the exact VC of A + eps B_inf at scale t/2 with eps = t/4",
        ],
        SuiteId::ConvexBody => &[
            "lhs is a 2t-packing of a finite sample of K, a lower bound on N(K): the fitted constant is a lower estimate",
            "rhs uses the exact VC(K, t/4)",
        ],
        SuiteId::BinftyThm => &[
            "lhs is the exact cover of a finite sample of K, a lower bound on N(K): the fitted constant is a lower estimate",
            "rhs uses the exact v = VC(K, t/8)",
        ],
        SuiteId::LinftyVsL1 => &[
            "lhs = eps exp((ln N_inf - ln N_1) t / (2 eps n)) with eps = t/10, the smallest C for the instance",
            "N_inf exact over box-grid centers; N_1 replaced by a strict 2eps-packing lower bound: direction safe",
        ],
        SuiteId::Dudley => &[
            "lhs = Monte Carlo estimate of l(K°); cutoff c M*_K with c = 1/2",
            "integrand uses packing lower bounds on N(K, B_2, eps) from a finite sample: direction safe",
            "volumetric check: packing <= (1 + 2 M*/eps)^n at eps in {0.1, 0.2, 0.4}, M* inflated by 3 stderr",
        ],
        SuiteId::TalagrandE => &[
            "lhs = Monte Carlo E; lower limit E/n with c = 1 in both places",
            "rhs is a lower Riemann sum over 24 log-spaced points with exact VC(K, t): direction safe",
        ],
        SuiteId::EltonFrontier => &["fit is the minimum of sqrt(s) t ln^2.1(2/t) / delta_hat over certified instances"],
        SuiteId::SignComparison => &[
            "lambda n = min(3, n); M is the smallest constant meeting the hypothesis",
            "hypothesis_range records whether lambda < ln^-4(n / M^2) holds",
        ],
        SuiteId::FatChain => &["lhs = VC(F + t/8 B_inf, t/2), rhs = fat_{t/8}(F), both exact; holds with constant 1"],
        SuiteId::ThmFat => &[
            "lhs uses the exact cover with centers in F, which is >= N: direction safe",
            "c_lower fits ln N(t/32) >= c fat_{t/2} with a packing lower bound on N: direction safe",
        ],
        SuiteId::Haussler => &["lhs uses the exact cover with centers in F, which is >= N: direction safe"],
    };
    v.iter().map(|s| s.to_string()).collect()
}

/// Runs one suite and folds its records into a report.
pub fn run_suite(cfg: &SuiteConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let start = Instant::now();
    let outcomes: Vec<Result<Outcome>> = (0..cfg.trials).into_par_iter().map(|i| run_instance(cfg, i)).collect();
    let mut records = Vec::new();
    let mut checks: BTreeMap<String, CheckCount> = BTreeMap::new();
    let mut skipped = 0;
    for o in outcomes {
        match o {
            Ok(o) => {
                records.extend(o.records);
                for (name, ok) in o.checks {
                    let c = checks.entry(name.to_string()).or_default();
                    c.checks += 1;
                    c.violations += usize::from(!ok);
                }
            }
            Err(e) if e.is_budget() => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if records.is_empty() && skipped > 0 {
        return Err(VceError::BudgetExceeded(format!(
            "every instance of suite {} ran out of time",
            cfg.suite
        )));
    }
    if records.is_empty() {
        return Err(VceError::Precondition(format!(
            "suite {} completed no instances ({skipped} skipped)",
            cfg.suite
        )));
    }
    let fit = cfg.suite.fit();
    let usable: Vec<(f64, f64)> = records.iter().filter(|r| r.ratio.is_some()).map(|r| (r.lhs, r.rhs_shape)).collect();
    let mut fitted = BTreeMap::new();
    let mut max_ratio = None;
    let mut argmax = None;
    if !usable.is_empty() {
        let c = match fit {
            Fit::Upper => fit_constant(&usable)?,
            Fit::Lower => fit_lower_constant(&usable)?,
        };
        fitted.insert(
            match fit {
                Fit::Upper => "C".to_string(),
                Fit::Lower => "c".to_string(),
            },
            c,
        );
        let best = records
            .iter()
            .filter_map(|r| r.ratio.map(|q| (q, r)))
            .fold(None::<(f64, &Record)>, |acc, (q, r)| match acc {
                Some((a, _)) if a >= q => acc,
                _ => Some((q, r)),
            });
        if let Some((q, r)) = best {
            max_ratio = Some(q);
            argmax = Some(format!("#{} seed={} {}", r.index, r.seed, r.instance));
        }
    }
    if cfg.suite == SuiteId::ThmFat {
        let lower: Vec<(f64, f64)> = records
            .iter()
            .filter_map(|r| {
                let fat = *r.values.get("fat_16_small")?;
                (fat > 0.0).then(|| (r.values["log_cover_lower_small"], fat))
            })
            .collect();
        if !lower.is_empty() {
            fitted.insert("c_lower".to_string(), fit_lower_constant(&lower)?);
        }
    }
    let violations = records.iter().filter(|r| r.degenerate()).count();
    let violations_at_one = cfg.suite.constant_free().then(|| {
        records
            .iter()
            .filter(|r| r.degenerate() || r.ratio.is_some_and(|q| q > 1.0))
            .count()
    });
    Ok(VerificationReport {
        schema: SCHEMA,
        suite_id: cfg.suite,
        seed: cfg.seed,
        config: cfg.clone(),
        fit,
        records,
        skipped,
        fitted_constants: fitted,
        violations,
        violations_at_one,
        max_ratio,
        argmax,
        checks,
        notes: notes(cfg.suite),
        timing: Timing {
            elapsed_ms: start.elapsed().as_millis() as u64,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub suite_id: SuiteId,
    pub seeds: Vec<u64>,
    pub constants: Vec<f64>,
    /// `max / min` over the seeds.
    pub spread: f64,
    pub stable: bool,
}

/// Re-runs a suite under several seeds and compares the fitted constant.
pub fn seed_stability(cfg: &SuiteConfig, seeds: &[u64]) -> Result<Stability> {
    let mut constants = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let r = run_suite(&SuiteConfig { seed, ..cfg.clone() })?;
        let c = r.fitted_constants.get("C").or_else(|| r.fitted_constants.get("c")).copied().unwrap_or(0.0);
        constants.push(c);
    }
    let max = constants.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = constants.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if min > 0.0 { max / min } else { f64::INFINITY };
    Ok(Stability {
        suite_id: cfg.suite,
        seeds: seeds.to_vec(),
        constants,
        spread,
        stable: spread <= 2.0,
    })
}

// ------------------------------------------- coordinate extraction frequency

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordinateInstance {
    pub system: SetSystem,
    pub eps: f64,
}

/// Random set systems on `n` in `20..=60` with every set holding at least
/// `eps n` elements.
pub fn random_set_system(s: &mut Stream) -> CoordinateInstance {
    let n = 20 + s.below(41);
    let eps = [0.25, 0.5][s.below(2)];
    let count = 2 + s.below(59);
    let need = (eps * n as f64).ceil() as usize;
    let sets = (0..count)
        .map(|_| {
            let size = need + s.below(n - need + 1);
            let mut idx: Vec<usize> = (0..n).collect();
            s.shuffle(&mut idx);
            idx.truncate(size);
            idx
        })
        .collect();
    CoordinateInstance {
        system: SetSystem::new(n, sets).expect("indices in range"),
        eps,
    }
}

/// Success frequency of single sampling rounds with seeds
/// `derive_seed(seed, 0..trials)`.
pub fn attempt_frequency(inst: &CoordinateInstance, k: usize, trials: usize, seed: u64) -> Result<f64> {
    let hits: Result<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|i| coordinate_attempt(&inst.system, inst.eps, k, derive_seed(seed, i as u64)))
        .collect();
    Ok(hits?.iter().filter(|&&h| h).count() as f64 / trials as f64)
}

/// Smallest `k` with `ln|S| <= c eps k`.
pub fn coordinate_k(inst: &CoordinateInstance, c: f64) -> usize {
    let l = ln(inst.system.sets.len() as f64);
    ((l / (c * inst.eps)) - 1e-12).ceil().max(1.0) as usize
}

/// Fits `c` so that `ln|S| <= c eps k` keeps the per-attempt success
/// frequency above `target` on every calibration instance: per instance the
/// smallest `k*` from which all larger `k` succeed often enough gives the
/// admissible ratio `ln|S| / (eps k*)`, and the fit is their minimum.
pub fn calibrate_coordinates(seed: u64, instances: usize, trials: usize, target: f64) -> Result<f64> {
    let mut c = f64::INFINITY;
    for i in 0..instances {
        let inst = random_set_system(&mut Stream::new(derive_seed(seed, i as u64)));
        let l = ln(inst.system.sets.len() as f64);
        let mut k_star = None;
        for k in (1..=inst.system.n).rev() {
            if attempt_frequency(&inst, k, trials, derive_seed(seed ^ 0x9e37, (i * 1000 + k) as u64))? >= target {
                k_star = Some(k);
            } else {
                break;
            }
        }
        if let Some(k) = k_star {
            if l > 0.0 {
                c = c.min(l / (inst.eps * k as f64));
            }
        } else {
            return Err(VceError::Precondition(format!("calibration instance {i} never reaches the target")));
        }
    }
    if !c.is_finite() {
        return Err(VceError::Precondition("calibration produced no constraint".into()));
    }
    Ok(c)
}

// -------------------------------------------------- fat-shattering oracle

/// `fat_eps(F)` by brute force: every subset, and witness levels drawn
/// from the uniform grid `-1 - eps + j step`, searched coordinate by
/// coordinate with a realizability check on each prefix.
pub fn fat_oracle(f: &FunctionClassSample, eps: f64, step: f64) -> usize {
    let n = f.points();
    let lo = -1.0 - eps;
    let count = ((2.0 + 2.0 * eps) / step).round() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|j| lo + j as f64 * step).collect();
    let mut best = 0;
    for size in 1..=n {
        if (1usize << size) > f.len() {
            break;
        }
        let found = combinations(n, size).into_iter().any(|sub| oracle_shatters(f, &sub, eps, &grid));
        if !found {
            break;
        }
        best = size;
    }
    best
}

fn oracle_shatters(f: &FunctionClassSample, sub: &[usize], eps: f64, grid: &[f64]) -> bool {
    let mut gamma = Vec::with_capacity(sub.len());
    oracle_rec(f, sub, eps, grid, &mut gamma)
}

fn oracle_rec(f: &FunctionClassSample, sub: &[usize], eps: f64, grid: &[f64], gamma: &mut Vec<f64>) -> bool {
    let j = gamma.len();
    if j == sub.len() {
        return true;
    }
    let mut tried: HashSet<(Vec<bool>, Vec<bool>)> = HashSet::new();
    for &g in grid {
        let above: Vec<bool> = f.values.iter().map(|r| r[sub[j]] >= g + eps - 1e-12).collect();
        let below: Vec<bool> = f.values.iter().map(|r| r[sub[j]] <= g - eps + 1e-12).collect();
        if !above.contains(&true) || !below.contains(&true) || !tried.insert((above, below)) {
            continue;
        }
        gamma.push(g);
        if prefix_realized(f, sub, eps, gamma) && oracle_rec(f, sub, eps, grid, gamma) {
            return true;
        }
        gamma.pop();
    }
    false
}

fn prefix_realized(f: &FunctionClassSample, sub: &[usize], eps: f64, gamma: &[f64]) -> bool {
    let k = gamma.len();
    let mut seen = vec![false; 1 << k];
    for row in &f.values {
        let mut mask = 0usize;
        let mut ok = true;
        for (j, &g) in gamma.iter().enumerate() {
            let v = row[sub[j]];
            if v >= g + eps - 1e-12 {
                mask |= 1 << j;
            } else if v > g - eps + 1e-12 {
                ok = false;
                break;
            }
        }
        if ok {
            seen[mask] = true;
        }
    }
    seen.iter().all(|&s| s)
}
