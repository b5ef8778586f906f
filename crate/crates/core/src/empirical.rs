//! Finite function-class samples: fat-shattering dimension with verified
//! witnesses, VC dimension of the inflated sample, and empirical L2 entropy.

use serde::{Deserialize, Serialize};

use crate::bitset::PointBits;
use crate::budget::Budget;
use crate::coverings::{covering_number, BallShape, CoverMode, CoverResult};
use crate::cubes::{CubeProblem, CubeSolution, PairOption};
use crate::dimensions::{Cube, VcResult};
use crate::error::{Result, VceError};
use crate::spaces::{parse_csv_matrix, PointSet};

/// Largest subset accepted by [`is_shattered`].
pub const MAX_SUBSET: usize = 16;

/// Slack on margin comparisons.
const TOL: f64 = 1e-12;

/// `values[f][i] = f(x_i)`, one row per function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionClassSample {
    pub values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl FunctionClassSample {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let s = FunctionClassSample { values, labels: None };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(VceError::InvalidInput("function class has no rows".into()));
        }
        let n = self.values[0].len();
        if n == 0 {
            return Err(VceError::InvalidInput("function class has no sample points".into()));
        }
        for (f, row) in self.values.iter().enumerate() {
            if row.len() != n {
                return Err(VceError::InvalidInput(format!(
                    "function {f} has {} values, expected {n}",
                    row.len()
                )));
            }
            if let Some((i, v)) = row.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
                return Err(VceError::InvalidInput(format!(
                    "function {f}, point {i}: value {v} outside [-1, 1]"
                )));
            }
        }
        if let Some(l) = &self.labels {
            if l.len() != self.values.len() {
                return Err(VceError::LengthMismatch {
                    expected: self.values.len(),
                    got: l.len(),
                });
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: FunctionClassSample = serde_json::from_str(s)?;
        raw.validate()?;
        Ok(raw)
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        Self::new(parse_csv_matrix(s)?)
    }

    /// All `2^n` functions `{0,1}^n`.
    pub fn boolean_cube(n: usize) -> Self {
        let values = (0..1usize << n)
            .map(|mask| (0..n).map(|i| ((mask >> i) & 1) as f64).collect())
            .collect();
        FunctionClassSample { values, labels: None }
    }

    /// Number of functions.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of sample points.
    pub fn points(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// The sample `F/s_n` as a subset of `[-1, 1]^n`.
    pub fn as_point_set(&self) -> Result<PointSet> {
        PointSet::interval(self.values.clone())
    }
}

/// `gamma[j]` is the level at `subset[j]`; `assignment[mask]` realizes the
/// dichotomy whose bit `j` puts `subset[j]` on the high side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShatterWitness {
    pub subset: Vec<usize>,
    pub gamma: Vec<f64>,
    pub assignment: Vec<usize>,
}

impl ShatterWitness {
    /// Checks every margin of every dichotomy.
    pub fn verify(&self, f: &FunctionClassSample, eps: f64) -> bool {
        let k = self.subset.len();
        if self.gamma.len() != k || k >= usize::BITS as usize || self.assignment.len() != 1 << k {
            return false;
        }
        self.assignment.iter().enumerate().all(|(mask, &fi)| {
            let Some(row) = f.values.get(fi) else {
                return false;
            };
            self.subset.iter().zip(&self.gamma).enumerate().all(|(j, (&i, &g))| {
                let Some(&v) = row.get(i) else {
                    return false;
                };
                if (mask >> j) & 1 == 1 {
                    v >= g + eps - TOL
                } else {
                    v <= g - eps + TOL
                }
            })
        })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(VceError::InvalidInput(format!("eps = {eps} must be positive")));
    }
    Ok(())
}

fn column(f: &FunctionClassSample, i: usize) -> Vec<f64> {
    let mut v: Vec<f64> = f.values.iter().map(|r| r[i]).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn matching(f: &FunctionClassSample, i: usize, pred: impl Fn(f64) -> bool) -> PointBits {
    let mut b = PointBits::empty(f.len());
    for (k, row) in f.values.iter().enumerate() {
        if pred(row[i]) {
            b.insert(k);
        }
    }
    b
}

/// Engine points are the functions. At point `x_i` a pair `(a, b)` of
/// observed values with `b - a >= 2 eps` has low side `{f(x_i) <= a}` and
/// high side `{f(x_i) >= b}`; any witness level slides to `(a + b) / 2`.
fn fat_problem(f: &FunctionClassSample, eps: f64) -> CubeProblem {
    let coords = (0..f.points())
        .map(|i| {
            let vals = column(f, i);
            let mut opts = Vec::new();
            for (x, &a) in vals.iter().enumerate() {
                for &b in &vals[x + 1..] {
                    if b - a >= 2.0 * eps - TOL {
                        opts.push(PairOption {
                            low: a,
                            high: b,
                            low_set: matching(f, i, |v| v <= a),
                            high_set: matching(f, i, |v| v >= b),
                        });
                    }
                }
            }
            opts
        })
        .collect();
    let mut p = CubeProblem {
        npoints: f.len(),
        coords,
        disjoint: true,
    };
    p.prune_dominated();
    p
}

fn witness_from(p: &CubeProblem, sol: &CubeSolution) -> ShatterWitness {
    let gamma = sol
        .sigma
        .iter()
        .zip(&sol.choice)
        .map(|(&c, &k)| {
            let o = &p.coords[c][k];
            (o.low + o.high) / 2.0
        })
        .collect();
    let assignment = sol
        .patterns
        .iter()
        .map(|q| q.iter().next().expect("embedded patterns are non-empty"))
        .collect();
    ShatterWitness {
        subset: sol.sigma.clone(),
        gamma,
        assignment,
    }
}

fn empty_witness() -> ShatterWitness {
    ShatterWitness {
        subset: Vec::new(),
        gamma: Vec::new(),
        assignment: vec![0],
    }
}

/// A witness that `subset` is `eps`-shattered, or `None`.
pub fn is_shattered(
    f: &FunctionClassSample,
    subset: &[usize],
    eps: f64,
    budget: &Budget,
) -> Result<Option<ShatterWitness>> {
    f.validate()?;
    check_eps(eps)?;
    let mut sigma = subset.to_vec();
    sigma.sort_unstable();
    if sigma.windows(2).any(|w| w[0] == w[1]) {
        return Err(VceError::InvalidInput("subset has repeated points".into()));
    }
    if let Some(&bad) = sigma.iter().find(|&&i| i >= f.points()) {
        return Err(VceError::InvalidInput(format!(
            "point {bad} outside 0..{}",
            f.points()
        )));
    }
    if sigma.len() > MAX_SUBSET {
        return Err(VceError::TooLarge(format!(
            "subsets of at most {MAX_SUBSET} points are supported, got {}",
            sigma.len()
        )));
    }
    if sigma.is_empty() {
        return Ok(Some(empty_witness()));
    }
    let p = fat_problem(f, eps);
    let sol = p.assignment(&sigma, budget)?;
    let w = sol.map(|s| witness_from(&p, &s));
    if let Some(w) = &w {
        if !w.verify(f, eps) {
            return Err(VceError::Numerical("shattering witness failed verification".into()));
        }
    }
    Ok(w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FatResult {
    pub dimension: usize,
    pub eps: f64,
    pub witness: ShatterWitness,
}

/// `fat_eps(F)`: the largest `eps`-shattered subset, lexicographically
/// smallest among those of maximal size.
pub fn fat_shattering(f: &FunctionClassSample, eps: f64, budget: &Budget) -> Result<FatResult> {
    f.validate()?;
    check_eps(eps)?;
    let p = fat_problem(f, eps);
    let witness = match p.maximize(budget)? {
        None => empty_witness(),
        Some(sol) => witness_from(&p, &sol),
    };
    if !witness.verify(f, eps) {
        return Err(VceError::Numerical("shattering witness failed verification".into()));
    }
    Ok(FatResult {
        dimension: witness.subset.len(),
        eps,
        witness,
    })
}

/// `VC(F/s_n + beta B_inf, s)` under the absolute-difference metric.
///
/// A cube vertex lies in the inflated set when some function is within
/// `beta` of it on every chosen point. Shifting a low value down (a high
/// value up) as far as its matching functions allow, candidates reduce to
/// `f(x_i) - beta` and `f(x_i) + beta`.
pub fn inflated_vc(f: &FunctionClassSample, beta: f64, s: f64, budget: &Budget) -> Result<VcResult> {
    f.validate()?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(VceError::InvalidInput(format!("inflation {beta} must be non-negative")));
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(VceError::InvalidInput(format!("scale {s} must be positive")));
    }
    let near = |x: f64, c: f64| (x - c).abs() <= beta + TOL;
    let coords = (0..f.points())
        .map(|i| {
            let vals = column(f, i);
            let mut opts = Vec::new();
            for &u in &vals {
                for &w in &vals {
                    let (a, b) = (u - beta, w + beta);
                    if b - a >= s - TOL {
                        opts.push(PairOption {
                            low: a,
                            high: b,
                            low_set: matching(f, i, |v| near(v, a)),
                            high_set: matching(f, i, |v| near(v, b)),
                        });
                    }
                }
            }
            opts
        })
        .collect();
    let mut p = CubeProblem {
        npoints: f.len(),
        coords,
        disjoint: s > 2.0 * beta + 4.0 * TOL,
    };
    p.prune_dominated();
    Ok(match p.maximize(budget)? {
        None => VcResult {
            dimension: 0,
            witness: None,
            scale: s,
        },
        Some(sol) => {
            let pairs = sol
                .sigma
                .iter()
                .zip(&sol.choice)
                .map(|(&c, &k)| (p.coords[c][k].low, p.coords[c][k].high))
                .collect();
            VcResult {
                dimension: sol.sigma.len(),
                witness: Some(Cube::new(sol.sigma, pairs)?),
                scale: s,
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VcFatChain {
    pub t: f64,
    pub inflated_vc: VcResult,
    pub fat: FatResult,
    pub holds: bool,
}

/// `VC(F/s_n + (t/8) B_inf, t/2) <= fat_{t/8}(F)`, both sides exact.
pub fn vc_fat_chain(f: &FunctionClassSample, t: f64, budget: &Budget) -> Result<VcFatChain> {
    if !(t > 0.0 && t < 1.0) {
        return Err(VceError::InvalidInput(format!("t = {t} must lie in (0, 1)")));
    }
    let inflated = inflated_vc(f, t / 8.0, t / 2.0, budget)?;
    let fat = fat_shattering(f, t / 8.0, budget)?;
    Ok(VcFatChain {
        t,
        holds: inflated.dimension <= fat.dimension,
        inflated_vc: inflated,
        fat,
    })
}

/// `N(F, L2(mu_n), t)` over the rows of `F`, in the requested mode.
pub fn empirical_entropy(f: &FunctionClassSample, t: f64, mode: CoverMode, budget: &Budget) -> Result<CoverResult> {
    f.validate()?;
    let a = f.as_point_set()?;
    let report = covering_number(&a, &BallShape::empirical_l2(), t, false, mode, budget)?;
    Ok(match mode {
        CoverMode::Exact => report
            .exact
            .ok_or_else(|| VceError::TooLarge("exact empirical entropy unavailable".into()))?,
        CoverMode::LowerBound => report.lower,
        CoverMode::UpperBound => report.upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boolean_cube_is_fully_shattered() {
        let f = FunctionClassSample::boolean_cube(3);
        let w = is_shattered(&f, &[0, 1, 2], 0.4, &Budget::unlimited()).unwrap().unwrap();
        assert_eq!(w.gamma, vec![0.5; 3]);
        assert!(w.verify(&f, 0.4));
        assert_eq!(fat_shattering(&f, 0.5, &Budget::unlimited()).unwrap().dimension, 3);
    }

    #[test]
    fn margin_is_non_strict() {
        let f = FunctionClassSample::new(vec![vec![0.0], vec![0.5]]).unwrap();
        assert_eq!(fat_shattering(&f, 0.25, &Budget::unlimited()).unwrap().dimension, 1);
        assert_eq!(fat_shattering(&f, 0.2500001, &Budget::unlimited()).unwrap().dimension, 0);
    }

    #[test]
    fn rejects_values_outside_unit_ball() {
        assert!(FunctionClassSample::new(vec![vec![1.5]]).is_err());
        assert!(FunctionClassSample::new(vec![]).is_err());
    }
}
