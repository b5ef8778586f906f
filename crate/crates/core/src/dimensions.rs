//! Exact scaled VC dimension with verifiable cube witnesses.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::bitset::PointBits;
use crate::budget::Budget;
use crate::cubes::{CubeProblem, PairOption};
use crate::error::{Result, VceError};
use crate::spaces::{separated_at, PointSet, QuasiMetric};

/// `prod_{i in sigma} {a_i, b_i}`, stored with `a_i < b_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub sigma: Vec<usize>,
    pub pairs: Vec<(f64, f64)>,
}

impl Cube {
    pub fn new(sigma: Vec<usize>, pairs: Vec<(f64, f64)>) -> Result<Self> {
        if sigma.len() != pairs.len() {
            return Err(VceError::LengthMismatch {
                expected: sigma.len(),
                got: pairs.len(),
            });
        }
        if sigma.windows(2).any(|w| w[0] >= w[1]) {
            return Err(VceError::InvalidInput("cube coordinates must be strictly increasing".into()));
        }
        let pairs = pairs
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        Ok(Cube { sigma, pairs })
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    /// Every pair separated at `level`.
    pub fn is_large(&self, m: &QuasiMetric, level: f64) -> bool {
        self.pairs.iter().all(|&(a, b)| separated_at(m.distance(a, b), level))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VcResult {
    pub dimension: usize,
    pub witness: Option<Cube>,
    pub scale: f64,
}

/// Whether all `2^|sigma|` vertices of `cube` occur among the
/// `sigma`-projections of `a`.
pub fn embeds(cube: &Cube, a: &PointSet) -> Result<bool> {
    let k = cube.dim();
    if let Some(&c) = cube.sigma.iter().find(|&&c| c >= a.dim()) {
        return Err(VceError::InvalidInput(format!(
            "cube coordinate {c} out of range for dimension {}",
            a.dim()
        )));
    }
    if k == 0 {
        return Ok(!a.is_empty());
    }
    if k >= 63 || (1usize << k) > a.len() {
        return Ok(false);
    }
    let mut seen = vec![false; 1 << k];
    'pt: for p in &a.points {
        let mut mask = 0usize;
        for (j, (&c, &(lo, hi))) in cube.sigma.iter().zip(&cube.pairs).enumerate() {
            let v = p[c];
            if v == hi && lo != hi {
                mask |= 1 << j;
            } else if v != lo {
                continue 'pt;
            }
        }
        seen[mask] = true;
    }
    Ok(seen.iter().all(|&s| s))
}

/// Candidate pairs per coordinate: distinct values present in the column,
/// separated at `level`.
pub(crate) fn problem_from_points(a: &PointSet, m: &QuasiMetric, level: f64) -> CubeProblem {
    let np = a.len();
    let coords = (0..a.dim())
        .map(|i| {
            let values = a.column_values(i);
            let sets: Vec<PointBits> = values
                .iter()
                .map(|&v| {
                    let mut b = PointBits::empty(np);
                    for (k, p) in a.points.iter().enumerate() {
                        if p[i] == v {
                            b.insert(k);
                        }
                    }
                    b
                })
                .collect();
            let mut opts = Vec::new();
            for x in 0..values.len() {
                for y in x + 1..values.len() {
                    if separated_at(m.distance(values[x], values[y]), level) {
                        opts.push(PairOption {
                            low: values[x],
                            high: values[y],
                            low_set: sets[x].clone(),
                            high_set: sets[y].clone(),
                        });
                    }
                }
            }
            opts
        })
        .collect();
    CubeProblem {
        npoints: np,
        coords,
        disjoint: true,
    }
}

pub(crate) fn result_from_problem(p: &CubeProblem, scale: f64, budget: &Budget) -> Result<VcResult> {
    Ok(match p.maximize(budget)? {
        None => VcResult {
            dimension: 0,
            witness: None,
            scale,
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
                witness: Some(Cube {
                    sigma: sol.sigma,
                    pairs,
                }),
                scale,
            }
        }
    })
}

/// `VC(A, t)`: the largest `|sigma|` carrying a cube with pairs separated at
/// level `t` that embeds into `A`.
pub fn vc_scaled(a: &PointSet, m: &QuasiMetric, t: f64, budget: &Budget) -> Result<VcResult> {
    if !(t > 0.0) {
        return Err(VceError::InvalidInput(format!("scale t = {t} must be positive")));
    }
    m.check_alphabet(&a.alphabet)?;
    result_from_problem(&problem_from_points(a, m, t), t, budget)
}

/// Smallest positive separation between values co-occurring in some column.
pub fn min_positive_separation(a: &PointSet, m: &QuasiMetric) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..a.dim() {
        let vals = a.column_values(i);
        for x in 0..vals.len() {
            for y in x + 1..vals.len() {
                let d = m.distance(vals[x], vals[y]);
                if d > 0.0 && best.is_none_or(|b| d < b) {
                    best = Some(d);
                }
            }
        }
    }
    best
}

/// `VC(A) = lim_{t -> 0+} VC(A, t)`, evaluated at the smallest positive
/// separation present in `A`.
pub fn vc_limit(a: &PointSet, m: &QuasiMetric, budget: &Budget) -> Result<VcResult> {
    m.check_alphabet(&a.alphabet)?;
    match min_positive_separation(a, m) {
        None => Ok(VcResult {
            dimension: 0,
            witness: None,
            scale: 0.0,
        }),
        Some(t) => result_from_problem(&problem_from_points(a, m, 0.0), t, budget),
    }
}

/// Classical VC dimension of a subset of `{0,1}^n`, by counting distinct
/// bitmask projections.
pub fn boolean_vc(a: &PointSet, budget: &Budget) -> Result<VcResult> {
    let n = a.dim();
    if n > 64 {
        return Err(VceError::TooLarge(format!("boolean fast path supports n <= 64, got {n}")));
    }
    let mut rows: Vec<u64> = Vec::with_capacity(a.len());
    for (r, p) in a.points.iter().enumerate() {
        let mut w = 0u64;
        for (i, &v) in p.iter().enumerate() {
            if v == 1.0 {
                w |= 1 << i;
            } else if v != 0.0 {
                return Err(VceError::InvalidInput(format!(
                    "point {r}, coordinate {i}: {v} is not Boolean"
                )));
            }
        }
        rows.push(w);
    }
    rows.sort_unstable();
    rows.dedup();
    let cap = if rows.is_empty() {
        0
    } else {
        (63 - (rows.len() as u64).leading_zeros()) as usize
    };
    let mut search = BooleanSearch {
        rows: &rows,
        n,
        cap,
        best: Vec::new(),
        seen: HashSet::new(),
        nodes: 0,
        budget,
    };
    search.dfs(&mut Vec::new(), 0)?;
    let best = search.best;
    Ok(VcResult {
        dimension: best.len(),
        witness: (!best.is_empty()).then(|| Cube {
            pairs: vec![(0.0, 1.0); best.len()],
            sigma: best,
        }),
        scale: 1.0,
    })
}

struct BooleanSearch<'a> {
    rows: &'a [u64],
    n: usize,
    cap: usize,
    best: Vec<usize>,
    seen: HashSet<u64>,
    nodes: u64,
    budget: &'a Budget,
}

impl BooleanSearch<'_> {
    fn shattered(&mut self, sigma: &[usize]) -> bool {
        let mask: u64 = sigma.iter().map(|&c| 1u64 << c).sum();
        let want = 1usize << sigma.len();
        self.seen.clear();
        for &r in self.rows {
            self.seen.insert(r & mask);
            if self.seen.len() == want {
                return true;
            }
        }
        false
    }

    fn dfs(&mut self, sigma: &mut Vec<usize>, start: usize) -> Result<()> {
        for j in start..self.n {
            if sigma.len() + (self.n - j) <= self.best.len() || self.best.len() >= self.cap {
                break;
            }
            self.nodes += 1;
            if self.nodes % 4096 == 1 {
                self.budget.check("boolean VC search")?;
            }
            sigma.push(j);
            if self.shattered(sigma) {
                if sigma.len() > self.best.len() {
                    self.best = sigma.clone();
                }
                self.dfs(sigma, j + 1)?;
            }
            sigma.pop();
        }
        Ok(())
    }
}
