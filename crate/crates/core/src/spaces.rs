//! Finite quasi-metric alphabets, product points and separation predicates.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VceError};

/// The coordinate space `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Alphabet {
    /// `{0, 1, ..., size - 1}`.
    Finite { size: usize },
    /// The closed interval `[-1, 1]`.
    Interval,
    /// Any finite real number.
    Real,
}

impl Alphabet {
    pub fn size(&self) -> Option<usize> {
        match self {
            Alphabet::Finite { size } => Some(*size),
            Alphabet::Interval | Alphabet::Real => None,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match self {
            Alphabet::Finite { size } => v.fract() == 0.0 && v >= 0.0 && v < *size as f64,
            Alphabet::Interval => (-1.0..=1.0).contains(&v),
            Alphabet::Real => v.is_finite(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricKind {
    /// `d(a, b) = 1` when `|a - b| >= q` and `a != b`, else 0. With `q = 0`
    /// this is the ordinary 0-1 metric.
    ZeroOneThreshold { q: f64 },
    AbsoluteDifference,
    DiscreteTable { d: Vec<Vec<f64>> },
}

/// Symmetric, reflexive, non-negative distance on the alphabet. The triangle
/// inequality is not required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiMetric {
    #[serde(flatten)]
    pub kind: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet_size: Option<usize>,
}

impl QuasiMetric {
    pub fn new(kind: MetricKind) -> Result<Self> {
        let m = QuasiMetric {
            kind,
            alphabet_size: None,
        };
        m.validate()?;
        Ok(m)
    }

    /// The 0-1 metric.
    pub fn zero_one() -> Self {
        QuasiMetric {
            kind: MetricKind::ZeroOneThreshold { q: 0.0 },
            alphabet_size: None,
        }
    }

    pub fn threshold(q: f64) -> Result<Self> {
        Self::new(MetricKind::ZeroOneThreshold { q })
    }

    pub fn absolute() -> Self {
        QuasiMetric {
            kind: MetricKind::AbsoluteDifference,
            alphabet_size: None,
        }
    }

    pub fn table(d: Vec<Vec<f64>>) -> Result<Self> {
        let size = d.len();
        let m = QuasiMetric {
            kind: MetricKind::DiscreteTable { d },
            alphabet_size: Some(size),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: QuasiMetric = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            MetricKind::ZeroOneThreshold { q } => {
                if !(q.is_finite() && *q >= 0.0) {
                    return Err(VceError::InvalidInput(format!("threshold q = {q} must be >= 0")));
                }
            }
            MetricKind::AbsoluteDifference => {}
            MetricKind::DiscreteTable { d } => {
                let k = d.len();
                if k == 0 {
                    return Err(VceError::InvalidInput("empty distance table".into()));
                }
                for (i, row) in d.iter().enumerate() {
                    if row.len() != k {
                        return Err(VceError::InvalidInput(format!(
                            "distance table row {i} has {} entries, expected {k}",
                            row.len()
                        )));
                    }
                    for (j, &v) in row.iter().enumerate() {
                        if !(v.is_finite() && v >= 0.0) {
                            return Err(VceError::InvalidInput(format!(
                                "distance table entry ({i},{j}) = {v} is not a non-negative real"
                            )));
                        }
                        if i == j && v != 0.0 {
                            return Err(VceError::InvalidInput(format!(
                                "distance table diagonal ({i},{i}) = {v} is not zero"
                            )));
                        }
                        if d[j][i] != v {
                            return Err(VceError::InvalidInput(format!(
                                "distance table not symmetric at ({i},{j})"
                            )));
                        }
                    }
                }
                if let Some(s) = self.alphabet_size {
                    if s != k {
                        return Err(VceError::InvalidInput(format!(
                            "alphabet_size {s} disagrees with table size {k}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn distance(&self, a: f64, b: f64) -> f64 {
        match &self.kind {
            MetricKind::ZeroOneThreshold { q } => {
                if a != b && (a - b).abs() >= *q {
                    1.0
                } else {
                    0.0
                }
            }
            MetricKind::AbsoluteDifference => (a - b).abs(),
            MetricKind::DiscreteTable { d } => d[a as usize][b as usize],
        }
    }

    /// Whether every value of `d` lies in `{0, 1}`.
    pub fn is_zero_one_valued(&self) -> bool {
        match &self.kind {
            MetricKind::ZeroOneThreshold { .. } => true,
            MetricKind::AbsoluteDifference => false,
            MetricKind::DiscreteTable { d } => d.iter().flatten().all(|&v| v == 0.0 || v == 1.0),
        }
    }

    /// Checks that entries of `alphabet` are legal arguments for this metric.
    pub fn check_alphabet(&self, alphabet: &Alphabet) -> Result<()> {
        if let MetricKind::DiscreteTable { d } = &self.kind {
            match alphabet {
                Alphabet::Finite { size } if *size <= d.len() => Ok(()),
                _ => Err(VceError::InvalidInput(format!(
                    "distance table of size {} cannot measure alphabet {alphabet:?}",
                    d.len()
                ))),
            }
        } else {
            Ok(())
        }
    }

    /// Diameter over a finite alphabet; `None` for the interval.
    pub fn diameter(&self, alphabet: &Alphabet) -> f64 {
        match alphabet {
            Alphabet::Finite { size } => {
                let mut best = 0.0f64;
                for a in 0..*size {
                    for b in 0..*size {
                        best = best.max(self.distance(a as f64, b as f64));
                    }
                }
                best
            }
            Alphabet::Interval => match &self.kind {
                MetricKind::AbsoluteDifference => 2.0,
                _ => 1.0,
            },
            Alphabet::Real => match &self.kind {
                MetricKind::AbsoluteDifference => f64::INFINITY,
                _ => 1.0,
            },
        }
    }

    /// Entropy bounds assume `diam(T) <= 1`; larger diameters are allowed
    /// but flagged.
    pub fn exceeds_unit_diameter(&self, alphabet: &Alphabet) -> bool {
        self.diameter(alphabet) > 1.0
    }

    /// Triangle inequality over a finite alphabet.
    pub fn is_metric_on(&self, alphabet: &Alphabet) -> bool {
        match (&self.kind, alphabet) {
            (MetricKind::AbsoluteDifference, _) => true,
            (MetricKind::ZeroOneThreshold { q }, Alphabet::Interval | Alphabet::Real) => *q == 0.0,
            (_, Alphabet::Finite { size }) => {
                let k = *size;
                for a in 0..k {
                    for b in 0..k {
                        for c in 0..k {
                            let (a, b, c) = (a as f64, b as f64, c as f64);
                            if self.distance(a, c) > self.distance(a, b) + self.distance(b, c) + 1e-12 {
                                return false;
                            }
                        }
                    }
                }
                true
            }
            _ => false,
        }
    }
}

/// `d(a, b)` counts as separated at `level`: `>= level` for positive levels,
/// `> 0` at level zero.
#[inline]
pub fn separated_at(d: f64, level: f64) -> bool {
    if level > 0.0 {
        d >= level
    } else {
        d > 0.0
    }
}

/// A finite subset of `T^n`, one row per point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub alphabet: Alphabet,
    pub points: Vec<Vec<f64>>,
    #[serde(skip)]
    n: usize,
}

impl PointSet {
    pub fn new(alphabet: Alphabet, points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.first().map_or(0, Vec::len);
        for (row, p) in points.iter().enumerate() {
            if p.len() != n {
                return Err(VceError::InvalidInput(format!(
                    "point {row} has {} coordinates, expected {n}",
                    p.len()
                )));
            }
            for (coord, &v) in p.iter().enumerate() {
                if !alphabet.contains(v) {
                    return Err(VceError::InvalidInput(format!(
                        "point {row}, coordinate {coord}: value {v} outside alphabet {alphabet:?}"
                    )));
                }
            }
        }
        if !points.is_empty() && n == 0 {
            return Err(VceError::InvalidInput("points must have at least one coordinate".into()));
        }
        Ok(PointSet { alphabet, points, n })
    }

    pub fn finite(size: usize, points: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(
            Alphabet::Finite { size },
            points
                .into_iter()
                .map(|p| p.into_iter().map(|v| v as f64).collect())
                .collect(),
        )
    }

    pub fn boolean(points: Vec<Vec<u8>>) -> Result<Self> {
        Self::finite(2, points.into_iter().map(|p| p.into_iter().map(usize::from).collect()).collect())
    }

    pub fn interval(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Alphabet::Interval, points)
    }

    pub fn real(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Alphabet::Real, points)
    }

    /// Every point of `{0, 1}^n`.
    pub fn full_boolean_cube(n: usize) -> Self {
        let pts = (0..1usize << n)
            .map(|m| (0..n).map(|i| ((m >> i) & 1) as f64).collect())
            .collect();
        PointSet {
            alphabet: Alphabet::Finite { size: 2 },
            points: pts,
            n,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn subset(&self, indices: &[usize]) -> PointSet {
        PointSet {
            alphabet: self.alphabet.clone(),
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            n: self.n,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: PointSet = serde_json::from_str(s)?;
        Self::new(raw.alphabet, raw.points)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("point sets serialize")
    }

    /// One point per row. Without an explicit alphabet, all-integer data is
    /// read as a finite alphabet of size `max + 1`, data inside `[-1, 1]` as
    /// the interval, anything else as the real line.
    pub fn from_csv(s: &str, alphabet: Option<Alphabet>) -> Result<Self> {
        let rows = parse_csv_matrix(s)?;
        let alphabet = alphabet.unwrap_or_else(|| {
            let all_int = rows.iter().flatten().all(|v| v.fract() == 0.0 && *v >= 0.0);
            if all_int {
                let max = rows.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
                Alphabet::Finite { size: max as usize + 1 }
            } else if rows.iter().flatten().all(|v| (-1.0..=1.0).contains(v)) {
                Alphabet::Interval
            } else {
                Alphabet::Real
            }
        });
        Self::new(alphabet, rows)
    }

    /// Distinct values present in coordinate `i`, sorted.
    pub fn column_values(&self, i: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self.points.iter().map(|p| p[i]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// Parses a headerless numeric CSV, naming the offending row and field on error.
pub fn parse_csv_matrix(s: &str) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(s.as_bytes());
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| VceError::Csv(format!("row {r}: {e}")))?;
        let mut row = Vec::with_capacity(rec.len());
        for (f, field) in rec.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| VceError::Csv(format!("row {r}, field {f}: cannot parse {field:?} as a number")))?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(VceError::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(())
}

fn check_entries(x: &[f64], m: &QuasiMetric) -> Result<()> {
    if let MetricKind::DiscreteTable { d } = &m.kind {
        for (coord, &v) in x.iter().enumerate() {
            if v.fract() != 0.0 || v < 0.0 || v as usize >= d.len() {
                return Err(VceError::OutOfAlphabet { coord, value: v });
            }
        }
    }
    Ok(())
}

/// Normalized Hamming-type distance `n^-1 sum_i d(x(i), y(i))`.
pub fn product_distance(x: &[f64], y: &[f64], m: &QuasiMetric) -> Result<f64> {
    check_pair(x, y)?;
    check_entries(x, m)?;
    check_entries(y, m)?;
    if x.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = x.iter().zip(y).map(|(&a, &b)| m.distance(a, b)).sum();
    Ok(s / x.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparationProfile {
    pub pair: (usize, usize),
    pub separated_coords: Vec<usize>,
}

/// Coordinates where `x` and `y` are separated at `level`.
pub fn separated_coords(x: &[f64], y: &[f64], m: &QuasiMetric, level: f64) -> Result<Vec<usize>> {
    check_pair(x, y)?;
    check_entries(x, m)?;
    check_entries(y, m)?;
    if !(level >= 0.0) {
        return Err(VceError::InvalidInput(format!("level {level} must be >= 0")));
    }
    Ok(x.iter()
        .zip(y)
        .enumerate()
        .filter(|(_, (&a, &b))| separated_at(m.distance(a, b), level))
        .map(|(i, _)| i)
        .collect())
}

pub fn separation_profile(a: &PointSet, i: usize, j: usize, m: &QuasiMetric, level: f64) -> Result<SeparationProfile> {
    let separated = separated_coords(a.point(i), a.point(j), m, level)?;
    Ok(SeparationProfile {
        pair: (i.min(j), i.max(j)),
        separated_coords: separated,
    })
}

#[inline]
pub(crate) fn separated_count(x: &[f64], y: &[f64], m: &QuasiMetric, level: f64) -> usize {
    x.iter()
        .zip(y)
        .filter(|(&a, &b)| separated_at(m.distance(a, b), level))
        .count()
}

/// Minimum, over distinct pairs, of the number of separated coordinates,
/// together with the first minimizing pair.
pub fn min_pairwise_separation(a: &PointSet, m: &QuasiMetric, level: f64) -> Result<(usize, (usize, usize))> {
    if a.len() < 2 {
        return Err(VceError::Precondition("need at least two points".into()));
    }
    m.check_alphabet(&a.alphabet)?;
    let mut best = (usize::MAX, (0, 0));
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let c = separated_count(a.point(i), a.point(j), m, level);
            if c < best.0 {
                best = (c, (i, j));
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn product_distance_examples() {
        let m = QuasiMetric::zero_one();
        assert!((product_distance(&[0., 1., 0.], &[1., 1., 0.], &m).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(product_distance(&[0.3, 0.1], &[0.3, 0.1], &m).unwrap(), 0.0);
        let a = QuasiMetric::absolute();
        assert!((product_distance(&[0.2, -0.4], &[-0.3, 0.1], &a).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn product_distance_errors() {
        let m = QuasiMetric::zero_one();
        assert!(matches!(
            product_distance(&[0.0], &[0.0, 1.0], &m),
            Err(VceError::LengthMismatch { .. })
        ));
        let t = QuasiMetric::table(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            product_distance(&[0.0, 2.0], &[0.0, 1.0], &t),
            Err(VceError::OutOfAlphabet { coord: 1, .. })
        ));
    }

    #[test]
    fn separation_examples() {
        let m = QuasiMetric::zero_one();
        assert_eq!(
            separated_coords(&[0., 0., 1., 1.], &[1., 0., 0., 1.], &m, 0.0).unwrap(),
            vec![0, 2]
        );
        let a = QuasiMetric::absolute();
        assert_eq!(separated_coords(&[0.9, 0.1], &[0.1, 0.0], &a, 0.5).unwrap(), vec![0]);
        assert!(separated_coords(&[0.4, 0.2], &[0.4, 0.2], &a, 0.0).unwrap().is_empty());
        assert!(separated_coords(&[0.0], &[1.0], &m, -1.0).is_err());
    }

    #[test]
    fn min_separation_examples() {
        let m = QuasiMetric::zero_one();
        let cube = PointSet::full_boolean_cube(2);
        assert_eq!(min_pairwise_separation(&cube, &m, 0.0).unwrap().0, 1);
        let two = PointSet::boolean(vec![vec![0, 0, 0], vec![1, 1, 1]]).unwrap();
        assert_eq!(min_pairwise_separation(&two, &m, 0.0).unwrap(), (3, (0, 1)));
        // 000000, 111111, 010101: pairwise Hamming distances 6, 3, 3.
        let rep = PointSet::boolean(vec![vec![0; 6], vec![1; 6], vec![0, 1, 0, 1, 0, 1]]).unwrap();
        let brute = {
            let mut best = usize::MAX;
            for i in 0..3 {
                for j in i + 1..3 {
                    let c = (0..6).filter(|&k| rep.point(i)[k] != rep.point(j)[k]).count();
                    best = best.min(c);
                }
            }
            best
        };
        assert_eq!(min_pairwise_separation(&rep, &m, 0.0).unwrap().0, brute);
        assert_eq!(brute, 3);
        let single = PointSet::boolean(vec![vec![0, 1]]).unwrap();
        assert!(min_pairwise_separation(&single, &m, 0.0).is_err());
    }

    #[test]
    fn table_validation() {
        assert!(QuasiMetric::table(vec![vec![0.0, 1.0], vec![0.5, 0.0]]).is_err());
        assert!(QuasiMetric::table(vec![vec![0.1, 1.0], vec![1.0, 0.0]]).is_err());
        let big = QuasiMetric::table(vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        assert!(big.exceeds_unit_diameter(&Alphabet::Finite { size: 2 }));
        let m = QuasiMetric::from_json(r#"{"kind": "zero_one_threshold", "q": 0.5}"#).unwrap();
        assert_eq!(m.kind, MetricKind::ZeroOneThreshold { q: 0.5 });
        // a quasi-metric without the triangle inequality
        let qm = QuasiMetric::table(vec![
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        assert!(!qm.is_metric_on(&Alphabet::Finite { size: 3 }));
    }

    #[test]
    fn point_set_io() {
        let p = PointSet::from_json(r#"{"alphabet": {"kind": "finite", "size": 3}, "points": [[0, 2], [1, 1]]}"#)
            .unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.len(), 2);
        assert!(PointSet::from_json(r#"{"alphabet": {"kind": "finite", "size": 2}, "points": [[0, 2]]}"#).is_err());
        let c = PointSet::from_csv("0,1\n1,1\n", None).unwrap();
        assert_eq!(c.alphabet, Alphabet::Finite { size: 2 });
        let c = PointSet::from_csv("0.5,-1\n", None).unwrap();
        assert_eq!(c.alphabet, Alphabet::Interval);
        let err = PointSet::from_csv("0,1\n1,x\n", None).unwrap_err();
        assert!(err.to_string().contains("row 1, field 1"), "{err}");
        let back = PointSet::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
    }

    proptest! {
        #[test]
        fn distance_symmetric_and_bounded(
            x in proptest::collection::vec(-1.0f64..=1.0, 5),
            y in proptest::collection::vec(-1.0f64..=1.0, 5),
            q in 0.0f64..1.0,
        ) {
            let m = QuasiMetric::threshold(q).unwrap();
            let dxy = product_distance(&x, &y, &m).unwrap();
            prop_assert_eq!(dxy, product_distance(&y, &x, &m).unwrap());
            prop_assert!(dxy <= 1.0);
            // {0,1}-valued: separated count equals n * d_n
            let sep = separated_coords(&x, &y, &m, 0.0).unwrap().len();
            prop_assert!((sep as f64 - 5.0 * dxy).abs() < 1e-12);
            let a = QuasiMetric::absolute();
            prop_assert_eq!(product_distance(&x, &y, &a).unwrap(), product_distance(&y, &x, &a).unwrap());
        }
    }
}
