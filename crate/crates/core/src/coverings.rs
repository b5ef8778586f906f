//! Packing and covering numbers of finite point sets.
//!
//! Exact solvers work on `u64` point masks and are limited to 64 points:
//! minimum set cover by branch and bound with a greedy incumbent, maximum
//! packing as a maximum clique of the compatibility graph.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::budget::Budget;
use crate::error::{Result, VceError};
use crate::spaces::{Alphabet, PointSet, QuasiMetric};

/// Tolerance for ball membership and separation tests.
pub const ETA: f64 = 1e-9;

/// Largest point set accepted by the exact solvers.
pub const EXACT_LIMIT: usize = 64;

fn ser_p<S: Serializer>(p: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if p.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*p)
    }
}

fn de_p<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(v),
        Raw::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
        Raw::Text(t) => Err(serde::de::Error::custom(format!("cannot read p = {t:?}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaugeKind {
    Lp {
        #[serde(serialize_with = "ser_p", deserialize_with = "de_p")]
        p: f64,
    },
    ProductQuasiMetric {
        metric: QuasiMetric,
    },
    /// `D_k`: points with `|x(i)| >= 1` on at most `k` coordinates.
    Dk {
        k: usize,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    Unit,
    #[serde(rename = "n_to_1_over_p")]
    NTo1OverP,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallShape {
    #[serde(flatten)]
    pub kind: GaugeKind,
    #[serde(default)]
    pub normalization: Normalization,
}

impl BallShape {
    pub fn lp(p: f64, normalization: Normalization) -> Self {
        BallShape {
            kind: GaugeKind::Lp { p },
            normalization,
        }
    }

    /// The `sqrt(n) B_2^n` gauge, i.e. the empirical `L_2` distance.
    pub fn empirical_l2() -> Self {
        Self::lp(2.0, Normalization::NTo1OverP)
    }

    pub fn linf() -> Self {
        Self::lp(f64::INFINITY, Normalization::Unit)
    }

    pub fn hamming(metric: QuasiMetric) -> Self {
        BallShape {
            kind: GaugeKind::ProductQuasiMetric { metric },
            normalization: Normalization::Unit,
        }
    }

    pub fn dk(k: usize) -> Self {
        BallShape {
            kind: GaugeKind::Dk { k },
            normalization: Normalization::Unit,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let b: BallShape = serde_json::from_str(s)?;
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            GaugeKind::Lp { p } if !(*p >= 1.0) => {
                Err(VceError::InvalidInput(format!("p = {p} must be at least 1")))
            }
            GaugeKind::Dk { k } if *k == 0 => Err(VceError::InvalidInput("D_k needs k >= 1".into())),
            GaugeKind::ProductQuasiMetric { metric } => metric.validate(),
            _ => Ok(()),
        }
    }

    /// Gauge of `y - x`, or `d_n(x, y)` for product quasi-metrics.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        match &self.kind {
            GaugeKind::Lp { p } => {
                let raw = if p.is_infinite() {
                    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                } else if *p == 1.0 {
                    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
                } else if *p == 2.0 {
                    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
                } else {
                    x.iter().zip(y).map(|(a, b)| (a - b).abs().powf(*p)).sum::<f64>().powf(1.0 / p)
                };
                match self.normalization {
                    Normalization::Unit => raw,
                    Normalization::NTo1OverP => raw / (n as f64).powf(1.0 / p),
                }
            }
            GaugeKind::ProductQuasiMetric { metric } => {
                if n == 0 {
                    0.0
                } else {
                    x.iter().zip(y).map(|(&a, &b)| metric.distance(a, b)).sum::<f64>() / n as f64
                }
            }
            GaugeKind::Dk { k } => {
                if n <= *k {
                    return 0.0;
                }
                let mut d: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - b).abs()).collect();
                d.sort_by(|a, b| b.total_cmp(a));
                d[*k]
            }
        }
    }

    /// Whether the gauge obeys the triangle inequality on this alphabet, which
    /// the packing lower bound for covers needs.
    pub fn is_metric(&self, alphabet: &Alphabet) -> bool {
        match &self.kind {
            GaugeKind::Lp { .. } => true,
            GaugeKind::ProductQuasiMetric { metric } => metric.is_metric_on(alphabet),
            GaugeKind::Dk { .. } => false,
        }
    }

    /// Per-coordinate reach of a ball of radius `t`, when the ball is a
    /// coordinate box (`l_inf`, or any gauge in one dimension).
    fn box_radius(&self, n: usize, t: f64) -> Option<f64> {
        match &self.kind {
            GaugeKind::Lp { p } if p.is_infinite() => Some(t),
            GaugeKind::Lp { p } if n == 1 => Some(match self.normalization {
                Normalization::Unit => t,
                Normalization::NTo1OverP => t * (n as f64).powf(1.0 / p),
            }),
            _ => None,
        }
    }

    #[inline]
    pub fn covers(&self, center: &[f64], x: &[f64], t: f64) -> bool {
        self.distance(center, x) <= t + ETA
    }
}

/// `(n^-1 sum_i (f_i - g_i)^2)^(1/2)`.
pub fn empirical_l2_distance(f: &[f64], g: &[f64]) -> Result<f64> {
    if f.len() != g.len() {
        return Err(VceError::LengthMismatch {
            expected: f.len(),
            got: g.len(),
        });
    }
    if f.is_empty() {
        return Ok(0.0);
    }
    Ok((f.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / f.len() as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Greedy,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverMode {
    Exact,
    LowerBound,
    UpperBound,
}

/// Where cover centers are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterFamily {
    /// Centers are points of `A` (the restricted number `N'`).
    Points,
    /// Points of `A` plus every box center whose lower corner touches point
    /// coordinates; complete for coordinate-box balls.
    BoxGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverResult {
    pub value: usize,
    pub mode: CoverMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Vec<f64>>>,
    pub restricted_centers: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub family: CenterFamily,
    pub exact: Option<CoverResult>,
    pub lower: CoverResult,
    pub upper: CoverResult,
    /// Lower bound from disjointness of balls; only valid for metric gauges.
    pub lower_is_packing: bool,
}

fn separated(shape: &BallShape, x: &[f64], y: &[f64], eps: f64) -> bool {
    shape.distance(x, y) >= eps - ETA
}

fn strictly_beyond(shape: &BallShape, x: &[f64], y: &[f64], r: f64) -> bool {
    shape.distance(x, y) > r + ETA
}

/// Maximal set kept by scanning `A` in input order.
fn greedy_packing(a: &PointSet, keep: impl Fn(&[f64], &[f64]) -> bool) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..a.len() {
        if chosen.iter().all(|&j| keep(a.point(i), a.point(j))) {
            chosen.push(i);
        }
    }
    chosen
}

/// Maximum clique in a graph on at most 64 vertices, lexicographically
/// smallest among maximum cliques.
fn max_clique(adj: &[u64], budget: &Budget) -> Result<Vec<usize>> {
    struct S<'a> {
        adj: &'a [u64],
        best: u64,
        best_len: u32,
        nodes: u64,
        budget: &'a Budget,
    }
    fn color_bound(adj: &[u64], mut cand: u64) -> u32 {
        // greedy colouring: number of colour classes bounds the clique size
        let mut colors = 0;
        while cand != 0 {
            colors += 1;
            let mut avail = cand;
            while avail != 0 {
                let v = avail.trailing_zeros() as usize;
                avail &= !(1u64 << v);
                avail &= !adj[v];
                cand &= !(1u64 << v);
            }
        }
        colors
    }
    fn expand(s: &mut S<'_>, cur: u64, cand: u64) -> Result<()> {
        s.nodes += 1;
        if s.nodes % 4096 == 0 {
            s.budget.check("maximum packing")?;
        }
        let len = cur.count_ones();
        if cand == 0 {
            if len > s.best_len || (len == s.best_len && lex_less(cur, s.best)) {
                s.best = cur;
                s.best_len = len;
            }
            return Ok(());
        }
        if len + color_bound(s.adj, cand) < s.best_len {
            return Ok(());
        }
        let mut rest = cand;
        while rest != 0 {
            if len + rest.count_ones() < s.best_len {
                break;
            }
            let v = rest.trailing_zeros() as usize;
            rest &= !(1u64 << v);
            expand(s, cur | 1 << v, rest & s.adj[v])?;
        }
        Ok(())
    }
    // set of indices sorted ascending; lexicographic comparison of sorted lists
    fn lex_less(a: u64, b: u64) -> bool {
        let x = a ^ b;
        if x == 0 {
            return false;
        }
        let low = x.trailing_zeros();
        a >> low & 1 == 1
    }
    let n = adj.len();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut s = S {
        adj,
        best: 0,
        best_len: 0,
        nodes: 0,
        budget,
    };
    expand(&mut s, 0, all)?;
    Ok((0..n).filter(|&i| s.best >> i & 1 == 1).collect())
}

fn compat_graph(a: &PointSet, keep: impl Fn(&[f64], &[f64]) -> bool) -> Vec<u64> {
    let n = a.len();
    let mut adj = vec![0u64; n];
    for i in 0..n {
        for j in i + 1..n {
            if keep(a.point(i), a.point(j)) {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    adj
}

/// Subset of `A` whose points are pairwise at gauge distance `>= eps`.
/// Greedy returns a maximal set in input order; exact a maximum one.
pub fn maximal_separated_subset(
    a: &PointSet,
    shape: &BallShape,
    eps: f64,
    strategy: Strategy,
    budget: &Budget,
) -> Result<Vec<usize>> {
    if !(eps > 0.0) {
        return Err(VceError::InvalidInput(format!("eps = {eps} must be positive")));
    }
    let keep = |x: &[f64], y: &[f64]| separated(shape, x, y, eps);
    match strategy {
        Strategy::Greedy => Ok(greedy_packing(a, keep)),
        Strategy::Exact => {
            if a.len() > EXACT_LIMIT {
                return Err(VceError::TooLarge(format!(
                    "exact packing supports at most {EXACT_LIMIT} points, got {}",
                    a.len()
                )));
            }
            max_clique(&compat_graph(a, keep), budget)
        }
    }
}

/// Maximum number of points pairwise strictly farther than `2t` apart. For a
/// metric gauge no radius-`t` ball holds two of them.
pub fn strict_packing_2t(a: &PointSet, shape: &BallShape, t: f64, strategy: Strategy, budget: &Budget) -> Result<usize> {
    let keep = |x: &[f64], y: &[f64]| strictly_beyond(shape, x, y, 2.0 * t);
    match strategy {
        Strategy::Greedy => Ok(greedy_packing(a, keep).len()),
        Strategy::Exact => {
            if a.len() > EXACT_LIMIT {
                return Err(VceError::TooLarge(format!(
                    "exact packing supports at most {EXACT_LIMIT} points, got {}",
                    a.len()
                )));
            }
            Ok(max_clique(&compat_graph(a, keep), budget)?.len())
        }
    }
}

const GRID_CAP: usize = 4096;

/// Candidate centers and the family they come from.
fn candidate_centers(a: &PointSet, shape: &BallShape, t: f64, restricted: bool) -> (Vec<Vec<f64>>, CenterFamily) {
    let mut centers: Vec<Vec<f64>> = a.points.clone();
    if restricted {
        return (centers, CenterFamily::Points);
    }
    let n = a.dim();
    let Some(r) = shape.box_radius(n, t) else {
        return (centers, CenterFamily::Points);
    };
    let cols: Vec<Vec<f64>> = (0..n).map(|i| a.column_values(i).into_iter().map(|v| v + r).collect()).collect();
    let size = cols.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len()));
    match size {
        Some(s) if s <= GRID_CAP => {
            let mut idx = vec![0usize; n];
            'outer: loop {
                centers.push(idx.iter().enumerate().map(|(i, &k)| cols[i][k]).collect());
                for i in 0..n {
                    idx[i] += 1;
                    if idx[i] < cols[i].len() {
                        continue 'outer;
                    }
                    idx[i] = 0;
                }
                break;
            }
            (centers, CenterFamily::BoxGrid)
        }
        _ => (centers, CenterFamily::Points),
    }
}

struct CoverSets {
    /// Coverage mask per candidate (after dedup and dominance removal).
    masks: Vec<u64>,
    /// Candidate index into the center list for each mask.
    owner: Vec<usize>,
}

fn coverage(a: &PointSet, shape: &BallShape, t: f64, centers: &[Vec<f64>]) -> CoverSets {
    let mut pairs: Vec<(u64, usize)> = centers
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let mut m = 0u64;
            for (k, p) in a.points.iter().enumerate() {
                if shape.covers(c, p, t) {
                    m |= 1 << k;
                }
            }
            (m, ci)
        })
        .filter(|(m, _)| *m != 0)
        .collect();
    // keep first owner of each distinct mask, then drop strict subsets
    let mut seen = std::collections::HashSet::new();
    pairs.retain(|(m, _)| seen.insert(*m));
    let keep: Vec<bool> = pairs
        .iter()
        .map(|(m, _)| !pairs.iter().any(|(o, _)| o != m && m & !o == 0))
        .collect();
    let mut masks = Vec::new();
    let mut owner = Vec::new();
    for ((m, ci), k) in pairs.into_iter().zip(keep) {
        if k {
            masks.push(m);
            owner.push(ci);
        }
    }
    CoverSets { masks, owner }
}

fn greedy_cover(universe: u64, masks: &[u64]) -> Vec<usize> {
    let mut left = universe;
    let mut chosen = Vec::new();
    while left != 0 {
        let (best, _) = masks
            .iter()
            .enumerate()
            .map(|(i, m)| (i, (m & left).count_ones()))
            .fold((usize::MAX, 0u32), |acc, (i, c)| if c > acc.1 { (i, c) } else { acc });
        if best == usize::MAX {
            break;
        }
        chosen.push(best);
        left &= !masks[best];
    }
    chosen
}

fn exact_cover(universe: u64, masks: &[u64], budget: &Budget) -> Result<Vec<usize>> {
    struct S<'a> {
        masks: &'a [u64],
        containing: Vec<Vec<usize>>,
        reach: Vec<u64>,
        best: Vec<usize>,
        nodes: u64,
        budget: &'a Budget,
    }
    fn lower_bound(s: &S<'_>, left: u64) -> usize {
        let biggest = s.masks.iter().map(|m| (m & left).count_ones()).max().unwrap_or(1).max(1);
        let by_size = left.count_ones().div_ceil(biggest) as usize;
        // elements no two of which share a covering set each need their own set
        let mut blocked = 0u64;
        let mut indep = 0;
        let mut rest = left;
        while rest != 0 {
            let e = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if blocked >> e & 1 == 0 {
                indep += 1;
                blocked |= s.reach[e];
            }
        }
        by_size.max(indep)
    }
    fn go(s: &mut S<'_>, left: u64, chosen: &mut Vec<usize>) -> Result<()> {
        s.nodes += 1;
        if s.nodes % 2048 == 0 {
            s.budget.check("exact set cover")?;
        }
        if left == 0 {
            if chosen.len() < s.best.len() {
                s.best = chosen.clone();
            }
            return Ok(());
        }
        if chosen.len() + lower_bound(s, left) >= s.best.len() {
            return Ok(());
        }
        // branch on the uncovered element with the fewest covering sets
        let mut pick = usize::MAX;
        let mut fewest = usize::MAX;
        let mut rest = left;
        while rest != 0 {
            let e = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if s.containing[e].len() < fewest {
                fewest = s.containing[e].len();
                pick = e;
            }
        }
        let mut options = s.containing[pick].clone();
        options.sort_by_key(|&k| (std::cmp::Reverse((s.masks[k] & left).count_ones()), k));
        for k in options {
            chosen.push(k);
            go(s, left & !s.masks[k], chosen)?;
            chosen.pop();
        }
        Ok(())
    }
    let nbits = 64 - universe.leading_zeros() as usize;
    let mut containing = vec![Vec::new(); nbits];
    let mut reach = vec![0u64; nbits];
    for (k, &m) in masks.iter().enumerate() {
        let mut r = m;
        while r != 0 {
            let e = r.trailing_zeros() as usize;
            r &= r - 1;
            if e < nbits {
                containing[e].push(k);
                reach[e] |= m;
            }
        }
    }
    let mut greedy = greedy_cover(universe, masks);
    greedy.sort_unstable();
    let mut s = S {
        masks,
        containing,
        reach,
        best: greedy,
        nodes: 0,
        budget,
    };
    go(&mut s, universe, &mut Vec::new())?;
    let mut best = s.best;
    best.sort_unstable();
    Ok(best)
}

/// Covering number of `A` by translates of `t * ball`.
///
/// Unrestricted covers draw centers from [`CenterFamily::BoxGrid`] when the
/// ball is a coordinate box, otherwise from `A`; the family is reported.
pub fn covering_number(
    a: &PointSet,
    shape: &BallShape,
    t: f64,
    restricted: bool,
    mode: CoverMode,
    budget: &Budget,
) -> Result<CoverReport> {
    if !(t > 0.0) {
        return Err(VceError::InvalidInput(format!("radius t = {t} must be positive")));
    }
    shape.validate()?;
    if a.is_empty() {
        return Err(VceError::InvalidInput("cannot cover an empty set".into()));
    }
    let metric = shape.is_metric(&a.alphabet);
    let small = a.len() <= EXACT_LIMIT;
    if mode == CoverMode::Exact && !small {
        return Err(VceError::TooLarge(format!(
            "exact covering supports at most {EXACT_LIMIT} points, got {}",
            a.len()
        )));
    }
    let lower_value = if metric {
        strict_packing_2t(a, shape, t, Strategy::Greedy, budget)?
    } else {
        1
    };
    let lower = CoverResult {
        value: lower_value.max(1),
        mode: CoverMode::LowerBound,
        centers: None,
        restricted_centers: restricted,
    };

    if !small {
        // greedy cover over plain point masks is not available past 64 points;
        // scan-order maximal packing at radius t is a restricted cover
        let net = greedy_packing(a, |x, y| !shape.covers(x, y, t));
        let upper = CoverResult {
            value: net.len(),
            mode: CoverMode::UpperBound,
            centers: Some(net.iter().map(|&i| a.point(i).to_vec()).collect()),
            restricted_centers: true,
        };
        return Ok(CoverReport {
            family: CenterFamily::Points,
            exact: None,
            lower,
            upper,
            lower_is_packing: metric,
        });
    }

    let (centers, family) = candidate_centers(a, shape, t, restricted);
    let sets = coverage(a, shape, t, &centers);
    let universe = if a.len() == 64 { u64::MAX } else { (1u64 << a.len()) - 1 };
    let greedy = greedy_cover(universe, &sets.masks);
    let to_centers = |idx: &[usize]| -> Vec<Vec<f64>> { idx.iter().map(|&k| centers[sets.owner[k]].clone()).collect() };
    let upper = CoverResult {
        value: greedy.len(),
        mode: CoverMode::UpperBound,
        centers: Some(to_centers(&greedy)),
        restricted_centers: restricted,
    };
    let exact = if mode == CoverMode::Exact {
        let best = exact_cover(universe, &sets.masks, budget)?;
        Some(CoverResult {
            value: best.len(),
            mode: CoverMode::Exact,
            centers: Some(to_centers(&best)),
            restricted_centers: restricted,
        })
    } else {
        None
    };
    Ok(CoverReport {
        family,
        exact,
        lower,
        upper,
        lower_is_packing: metric,
    })
}

/// Whether `centers` cover every point of `a` at radius `t`.
pub fn verify_cover(a: &PointSet, shape: &BallShape, t: f64, centers: &[Vec<f64>]) -> bool {
    a.points.iter().all(|p| centers.iter().any(|c| shape.covers(c, p, t)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingBracket {
    /// Size of a maximum (exact) or maximal (greedy) `t`-separated subset.
    pub packing: usize,
    pub packing_exact: bool,
    /// Restricted covering number at radius `t`; exact when `A` is small.
    pub restricted_cover: usize,
    pub restricted_cover_exact: bool,
    /// Lower bound on the covering number at radius `t / 2` implied by the
    /// packing (metric gauges only).
    pub half_radius_cover_lower: Option<usize>,
    /// `N'(t) <= M(t)` held.
    pub consistent: bool,
}

/// Packing number at separation `t` with the covering numbers it brackets:
/// `N(t) <= N'(t) <= M(t)` always, and `M(t) <= N(t/2)`-type bounds when the
/// gauge is a metric.
pub fn packing_cover_bracket(a: &PointSet, shape: &BallShape, t: f64, budget: &Budget) -> Result<PackingBracket> {
    if !(t > 0.0) {
        return Err(VceError::InvalidInput(format!("t = {t} must be positive")));
    }
    let small = a.len() <= EXACT_LIMIT;
    let strategy = if small { Strategy::Exact } else { Strategy::Greedy };
    let packing = maximal_separated_subset(a, shape, t, strategy, budget)?.len();
    let mode = if small { CoverMode::Exact } else { CoverMode::UpperBound };
    let rep = covering_number(a, shape, t, true, mode, budget)?;
    let restricted_cover = rep.exact.as_ref().map_or(rep.upper.value, |e| e.value);
    let metric = shape.is_metric(&a.alphabet);
    Ok(PackingBracket {
        packing,
        packing_exact: small,
        restricted_cover,
        restricted_cover_exact: small,
        half_radius_cover_lower: metric.then(|| strict_packing_2t(a, shape, t / 2.0, strategy, budget)).transpose()?,
        consistent: restricted_cover <= packing || !small,
    })
}
