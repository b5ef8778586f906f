//! Dense two-phase simplex over `f64` or exact rationals.
//!
//! Solves `min c.x` subject to `A x = b`, `x >= 0`. Dantzig pricing, falling
//! back to Bland's rule after a run of degenerate pivots.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

use crate::budget::Budget;
use crate::error::{Result, VceError};

pub trait Scalar:
    Clone
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Strictly positive beyond the type's tolerance.
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
}

const FLOAT_TOL: f64 = 1e-10;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_pos(&self) -> bool {
        *self > FLOAT_TOL
    }
    fn is_neg(&self) -> bool {
        *self < -FLOAT_TOL
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }
    /// Exact binary value of `v`.
    fn from_f64(v: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(v).expect("finite input")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_pos(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<T> {
    /// Optimal value, primal solution and dual multipliers `y` with
    /// `c - A^T y >= 0`.
    Optimal { value: T, x: Vec<T>, dual: Vec<T> },
    /// Farkas ray: `A^T y <= 0` and `b.y > 0`.
    Infeasible { ray: Vec<T> },
    Unbounded,
}

const MAX_PIVOTS: usize = 200_000;

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    /// Structural columns; artificials follow, then the right-hand side.
    n: usize,
}

impl<T: Scalar> Tableau<T> {
    fn rhs(&self, i: usize) -> &T {
        self.rows[i].last().expect("rhs column")
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.rows[r][e].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[e].clone();
            if f == T::zero() {
                continue;
            }
            for (v, pv) in row.iter_mut().zip(&prow) {
                if *pv != T::zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            row[e] = T::zero();
        }
        self.basis[r] = e;
    }

    /// Reduced costs `cost_j - sum_i cost_{basis i} row_i[j]` for columns `< limit`.
    fn reduced(&self, cost: &[T], limit: usize) -> Vec<T> {
        let mut rc: Vec<T> = cost[..limit].to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &cost[self.basis[i]];
            if !(cb.is_pos() || cb.is_neg()) {
                continue;
            }
            for (j, v) in rc.iter_mut().enumerate() {
                *v = v.clone() - cb.clone() * row[j].clone();
            }
        }
        rc
    }

    /// Runs the simplex on `cost` over columns `< limit`. Returns false when
    /// unbounded.
    fn optimize(&mut self, cost: &[T], limit: usize, budget: &Budget) -> Result<bool> {
        let mut stall = 0usize;
        let mut last_obj: Option<T> = None;
        for it in 0..MAX_PIVOTS {
            if it % 256 == 255 {
                budget.check("linear program")?;
            }
            let rc = self.reduced(cost, limit);
            let bland = stall > 30;
            let mut enter = None;
            for (j, v) in rc.iter().enumerate() {
                if v.is_neg() && !self.basis.contains(&j) {
                    match enter {
                        None => enter = Some(j),
                        Some(_) if bland => {}
                        Some(k) => {
                            if *v < rc[k] {
                                enter = Some(j)
                            }
                        }
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some(e) = enter else {
                return Ok(true);
            };
            let mut leave: Option<usize> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][e];
                if !a.is_pos() {
                    continue;
                }
                let ratio = self.rhs(i).clone() / a.clone();
                leave = match leave {
                    None => Some(i),
                    Some(l) => {
                        let cur = self.rhs(l).clone() / self.rows[l][e].clone();
                        if ratio < cur || (!(cur < ratio) && self.basis[i] < self.basis[l]) {
                            Some(i)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
            let Some(r) = leave else {
                return Ok(false);
            };
            self.pivot(r, e);
            let obj = self
                .basis
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (i, &b)| acc + cost[b].clone() * self.rhs(i).clone());
            let improved = match &last_obj {
                Some(prev) => (prev.clone() - obj.clone()).is_pos(),
                None => true,
            };
            stall = if improved { 0 } else { stall + 1 };
            last_obj = Some(obj);
        }
        Err(VceError::Numerical(format!("simplex exceeded {MAX_PIVOTS} pivots")))
    }
}

/// Minimizes `c.x` subject to `a x = b`, `x >= 0`.
pub fn solve<T: Scalar>(a: &[Vec<T>], b: &[T], c: &[T], budget: &Budget) -> Result<LpOutcome<T>> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(VceError::InvalidInput("inconsistent linear program dimensions".into()));
    }
    let mut flip = vec![false; m];
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        flip[i] = b[i].is_neg();
        let s = |v: &T| if flip[i] { -v.clone() } else { v.clone() };
        let mut row: Vec<T> = a[i].iter().map(s).collect();
        row.extend((0..m).map(|k| if k == i { T::one() } else { T::zero() }));
        row.push(s(&b[i]));
        rows.push(row);
    }
    let mut tab = Tableau {
        rows,
        basis: (n..n + m).collect(),
        n,
    };
    let mut phase1 = vec![T::zero(); n + m];
    for v in phase1.iter_mut().skip(n) {
        *v = T::one();
    }
    tab.optimize(&phase1, n + m, budget)?;
    let infeas = tab
        .basis
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, &bi)| if bi >= n { acc + tab.rhs(i).clone() } else { acc });
    if infeas.is_pos() {
        // phase-one duals y satisfy A^T y <= 0 and b.y = infeasibility > 0
        return Ok(LpOutcome::Infeasible {
            ray: dual_from(&tab, &phase1, &flip),
        });
    }
    // drive zero-level artificials out of the basis where possible
    for r in 0..m {
        if tab.basis[r] >= n {
            if let Some(e) = (0..n).find(|&j| tab.rows[r][j].is_pos() || tab.rows[r][j].is_neg()) {
                tab.pivot(r, e);
            }
        }
    }
    let mut cost = c.to_vec();
    cost.extend((0..m).map(|_| T::zero()));
    if !tab.optimize(&cost, n, budget)? {
        return Ok(LpOutcome::Unbounded);
    }
    let mut x = vec![T::zero(); n];
    for (i, &bi) in tab.basis.iter().enumerate() {
        if bi < n {
            x[bi] = tab.rhs(i).clone();
        }
    }
    let value = x.iter().zip(c).fold(T::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
    let dual = dual_from(&tab, &cost, &flip);
    Ok(LpOutcome::Optimal { value, x, dual })
}

/// `y = c_B^T B^-1`, read from the artificial columns, mapped back through
/// the row sign flips.
fn dual_from<T: Scalar>(tab: &Tableau<T>, cost: &[T], flip: &[bool]) -> Vec<T> {
    let m = tab.rows.len();
    let n = tab.n;
    (0..m)
        .map(|k| {
            let y = tab
                .basis
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (i, &bi)| acc + cost[bi].clone() * tab.rows[i][n + k].clone());
            if flip[k] {
                -y
            } else {
                y
            }
        })
        .collect()
}

pub fn to_rational(v: &[f64]) -> Vec<BigRational> {
    v.iter().map(|&x| <BigRational as Scalar>::from_f64(x)).collect()
}
