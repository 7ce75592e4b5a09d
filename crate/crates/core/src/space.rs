//! Finite mm-spaces, extended mm-spaces and weight vectors.

use serde::{Deserialize, Serialize};

use crate::budget::{tol_at, TOL};
use crate::error::{invalid_param, invalid_space, Result};

/// Finite metric on points `0..len()`.
pub trait Metric {
    fn len(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn diameter(&self) -> f64 {
        let n = self.len();
        let mut d = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                d = d.max(self.dist(i, j));
            }
        }
        d
    }
}

/// A metric carrying a probability measure with full support.
pub trait WeightedMetric: Metric {
    fn weights(&self) -> &[f64];

    fn weight(&self, i: usize) -> f64 {
        self.weights()[i]
    }
}

/// Dense symmetric distance matrix without a measure.
#[derive(Clone, Debug, PartialEq)]
pub struct DistMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        DistMatrix { n, d }
    }
}

impl Metric for DistMatrix {
    fn len(&self) -> usize {
        self.n
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

/// Checks matrix shape, symmetry, zero diagonal, positivity and the triangle inequality.
/// Infinite entries are accepted only when `allow_inf` is set.
fn check_matrix(n: usize, d: &mut [f64], allow_inf: bool) -> Result<()> {
    for i in 0..n {
        if d[i * n + i] != 0.0 {
            return invalid_space(format!("nonzero diagonal entry at {i}"));
        }
        for j in (i + 1)..n {
            let a = d[i * n + j];
            let b = d[j * n + i];
            for v in [a, b] {
                if v.is_nan() || v == f64::NEG_INFINITY || (!allow_inf && v.is_infinite()) {
                    return invalid_space(format!("bad distance {v} at ({i},{j})"));
                }
                if v <= 0.0 {
                    return invalid_space(format!("nonpositive distance {v} between {i} and {j}"));
                }
            }
            if a.is_infinite() != b.is_infinite()
                || (a.is_finite() && (a - b).abs() > tol_at(a.max(b)))
            {
                return invalid_space(format!("asymmetric distance at ({i},{j})"));
            }
            d[j * n + i] = a;
        }
    }
    for i in 0..n {
        for j in 0..n {
            let dij = d[i * n + j];
            if dij.is_infinite() {
                continue;
            }
            for k in 0..n {
                let djk = d[j * n + k];
                let dik = d[i * n + k];
                if djk.is_infinite() {
                    continue;
                }
                if dik > dij + djk + tol_at(dij + djk) {
                    return invalid_space(format!(
                        "triangle inequality fails: d({i},{k}) = {dik} > d({i},{j}) + d({j},{k}) = {}",
                        dij + djk
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Rejects negative weights, drops zero weights and checks the total.
/// Returns the indices kept.
fn check_weights(w: &[f64]) -> Result<Vec<usize>> {
    let mut keep = Vec::new();
    let mut sum = 0.0;
    for (i, &x) in w.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return invalid_space(format!("bad weight {x} at {i}"));
        }
        if x > 0.0 {
            keep.push(i);
            sum += x;
        }
    }
    if keep.is_empty() {
        return invalid_space("all weights are zero");
    }
    if (sum - 1.0).abs() > TOL {
        return invalid_space(format!("weights sum to {sum}, expected 1"));
    }
    Ok(keep)
}

fn flatten(rows: &[Vec<f64>]) -> Result<(usize, Vec<f64>)> {
    let n = rows.len();
    let mut d = Vec::with_capacity(n * n);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return invalid_space(format!("row {i} has {} entries, expected {n}", r.len()));
        }
        d.extend_from_slice(r);
    }
    Ok((n, d))
}

fn select(n: usize, d: &[f64], keep: &[usize]) -> Vec<f64> {
    let m = keep.len();
    let mut out = vec![0.0; m * m];
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            out[a * m + b] = d[i * n + j];
        }
    }
    out
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// A finite metric space with a fully supported probability measure.
///
/// Distances are stored as a shape matrix times a positive unit so that
/// rescaling is exact and homogeneous invariants can be evaluated on the shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRecord", into = "SpaceRecord")]
pub struct FiniteMmSpace {
    labels: Vec<String>,
    shape: Vec<f64>,
    unit: f64,
    dist: Vec<f64>,
    weights: Vec<f64>,
}

impl FiniteMmSpace {
    /// Validated constructor. Zero-weight points are removed.
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let (n, mut d) = flatten(&dist)?;
        if n == 0 {
            return invalid_space("empty space");
        }
        if weights.len() != n || labels.len() != n {
            return invalid_space(format!(
                "{n} points but {} weights and {} labels",
                weights.len(),
                labels.len()
            ));
        }
        check_matrix(n, &mut d, false)?;
        let keep = check_weights(&weights)?;
        let labels = keep.iter().map(|&i| labels[i].clone()).collect();
        let weights = keep.iter().map(|&i| weights[i]).collect();
        let d = select(n, &d, &keep);
        Ok(Self::from_raw(labels, d, weights))
    }

    pub fn from_matrix(dist: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let labels = default_labels(dist.len());
        Self::new(labels, dist, weights)
    }

    /// Unchecked constructor for internal constructions known to be metric.
    /// Zero weights are still pruned.
    pub(crate) fn from_raw(labels: Vec<String>, d: Vec<f64>, weights: Vec<f64>) -> Self {
        let n = weights.len();
        debug_assert_eq!(d.len(), n * n);
        if weights.iter().any(|&w| w == 0.0) {
            let keep: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
            let d = select(n, &d, &keep);
            let labels = keep.iter().map(|&i| labels[i].clone()).collect();
            let weights = keep.iter().map(|&i| weights[i]).collect();
            return Self::from_raw(labels, d, weights);
        }
        FiniteMmSpace {
            labels,
            shape: d.clone(),
            unit: 1.0,
            dist: d,
            weights,
        }
    }

    pub(crate) fn from_shape(labels: Vec<String>, shape: Vec<f64>, unit: f64, weights: Vec<f64>) -> Self {
        let dist = if unit == 1.0 {
            shape.clone()
        } else {
            shape.iter().map(|&v| v * unit).collect()
        };
        FiniteMmSpace {
            labels,
            shape,
            unit,
            dist,
            weights,
        }
    }

    pub fn one_point() -> Self {
        Self::from_raw(vec!["*".into()], vec![0.0], vec![1.0])
    }

    /// Two points at distance `l` with weights `p` and `1 - p`.
    pub fn two_point(l: f64, p: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return invalid_param(format!("two-point distance must be positive, got {l}"));
        }
        if !(p > 0.0 && p < 1.0) {
            return invalid_param(format!("two-point weight must lie in (0,1), got {p}"));
        }
        Ok(Self::from_raw(
            vec!["a".into(), "b".into()],
            vec![0.0, l, l, 0.0],
            vec![p, 1.0 - p],
        ))
    }

    /// Re-runs the full validation. Constructions skip it; tests call it.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let mut d = self.dist.clone();
        check_matrix(n, &mut d, false)?;
        let keep = check_weights(&self.weights)?;
        if keep.len() != n {
            return invalid_space("zero weight present");
        }
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dist_flat(&self) -> &[f64] {
        &self.dist
    }

    pub fn dist_rows(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n).map(|i| self.dist[i * n..(i + 1) * n].to_vec()).collect()
    }

    /// Scale factor applied to the shape matrix.
    pub fn unit(&self) -> f64 {
        self.unit
    }

    /// The same points and measure with the unit stripped.
    pub fn shape_space(&self) -> FiniteMmSpace {
        FiniteMmSpace::from_shape(self.labels.clone(), self.shape.clone(), 1.0, self.weights.clone())
    }

    pub(crate) fn shape_flat(&self) -> &[f64] {
        &self.shape
    }

    pub fn to_extended(&self) -> ExtendedFiniteMmSpace {
        ExtendedFiniteMmSpace {
            labels: self.labels.clone(),
            dist: self.dist.clone(),
            weights: self.weights.clone(),
        }
    }

    /// Distance from `i` to the set `a`; infinite for an empty set.
    pub fn dist_to_set(&self, i: usize, a: &[usize]) -> f64 {
        a.iter().map(|&j| self.dist(i, j)).fold(f64::INFINITY, f64::min)
    }
}

impl Metric for FiniteMmSpace {
    fn len(&self) -> usize {
        self.weights.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.weights.len() + j]
    }
}

impl WeightedMetric for FiniteMmSpace {
    fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// A finite mm-space whose distance may take the value `f64::INFINITY`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExtendedRecord", into = "ExtendedRecord")]
pub struct ExtendedFiniteMmSpace {
    labels: Vec<String>,
    dist: Vec<f64>,
    weights: Vec<f64>,
}

impl ExtendedFiniteMmSpace {
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let (n, mut d) = flatten(&dist)?;
        if n == 0 {
            return invalid_space("empty space");
        }
        if weights.len() != n || labels.len() != n {
            return invalid_space("dimension mismatch between labels, distances and weights");
        }
        check_matrix(n, &mut d, true)?;
        let keep = check_weights(&weights)?;
        Ok(ExtendedFiniteMmSpace {
            labels: keep.iter().map(|&i| labels[i].clone()).collect(),
            dist: select(n, &d, &keep),
            weights: keep.iter().map(|&i| weights[i]).collect(),
        })
    }

    pub fn from_matrix(dist: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let labels = default_labels(dist.len());
        Self::new(labels, dist, weights)
    }

    pub(crate) fn from_raw(labels: Vec<String>, dist: Vec<f64>, weights: Vec<f64>) -> Self {
        ExtendedFiniteMmSpace { labels, dist, weights }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let mut d = self.dist.clone();
        check_matrix(n, &mut d, true)?;
        let keep = check_weights(&self.weights)?;
        if keep.len() != n {
            return invalid_space("zero weight present");
        }
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dist_rows(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n).map(|i| self.dist[i * n..(i + 1) * n].to_vec()).collect()
    }

    /// Converts to a finite space when every distance is finite.
    pub fn to_finite(&self) -> Result<FiniteMmSpace> {
        if self.dist.iter().any(|v| v.is_infinite()) {
            return invalid_space("space has infinite distances");
        }
        Ok(FiniteMmSpace::from_raw(
            self.labels.clone(),
            self.dist.clone(),
            self.weights.clone(),
        ))
    }

    /// Relabels and reorders points: point `i` of the result is point `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize], labels: Vec<String>) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n || labels.len() != n {
            return invalid_param("permutation length mismatch");
        }
        for &p in perm {
            if p >= n || seen[p] {
                return invalid_param("not a permutation");
            }
            seen[p] = true;
        }
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = self.dist(perm[i], perm[j]);
            }
        }
        Ok(ExtendedFiniteMmSpace {
            labels,
            dist: d,
            weights: perm.iter().map(|&p| self.weights[p]).collect(),
        })
    }
}

impl Metric for ExtendedFiniteMmSpace {
    fn len(&self) -> usize {
        self.weights.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.weights.len() + j]
    }
}

impl WeightedMetric for ExtendedFiniteMmSpace {
    fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceRecord {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<SpaceRecord> for FiniteMmSpace {
    type Error = crate::MmError;

    fn try_from(r: SpaceRecord) -> Result<Self> {
        FiniteMmSpace::new(r.labels, r.dist, r.weights)
    }
}

impl From<FiniteMmSpace> for SpaceRecord {
    fn from(s: FiniteMmSpace) -> Self {
        SpaceRecord {
            dist: s.dist_rows(),
            labels: s.labels,
            weights: s.weights,
        }
    }
}

/// Serialized form; `null` stands for an infinite distance.
#[derive(Serialize, Deserialize)]
struct ExtendedRecord {
    labels: Vec<String>,
    dist: Vec<Vec<Option<f64>>>,
    weights: Vec<f64>,
}

impl TryFrom<ExtendedRecord> for ExtendedFiniteMmSpace {
    type Error = crate::MmError;

    fn try_from(r: ExtendedRecord) -> Result<Self> {
        let dist = r
            .dist
            .into_iter()
            .map(|row| row.into_iter().map(|v| v.unwrap_or(f64::INFINITY)).collect())
            .collect();
        ExtendedFiniteMmSpace::new(r.labels, dist, r.weights)
    }
}

impl From<ExtendedFiniteMmSpace> for ExtendedRecord {
    fn from(s: ExtendedFiniteMmSpace) -> Self {
        ExtendedRecord {
            dist: s
                .dist_rows()
                .into_iter()
                .map(|row| row.into_iter().map(|v| v.is_finite().then_some(v)).collect())
                .collect(),
            labels: s.labels,
            weights: s.weights,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightMode {
    /// Nonnegative entries summing to one.
    A1,
    /// Nonincreasing nonnegative entries with sum at most one.
    A,
}

/// A finite sequence of weights; missing trailing entries are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    entries: Vec<f64>,
    mode: WeightMode,
}

impl WeightVector {
    pub fn a1(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return invalid_param("weight vector in A1 must be nonempty");
        }
        let mut sum = 0.0;
        for &x in &entries {
            if !x.is_finite() || x < 0.0 {
                return invalid_param(format!("bad weight {x}"));
            }
            sum += x;
        }
        if (sum - 1.0).abs() > TOL {
            return invalid_param(format!("weights sum to {sum}, expected 1"));
        }
        Ok(WeightVector {
            entries,
            mode: WeightMode::A1,
        })
    }

    /// An atom vector; the empty vector is the zero sequence.
    pub fn atoms(entries: Vec<f64>) -> Result<Self> {
        let mut sum = 0.0;
        for (i, &x) in entries.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return invalid_param(format!("bad weight {x}"));
            }
            if i > 0 && x > entries[i - 1] {
                return invalid_param("atom weights must be nonincreasing");
            }
            sum += x;
        }
        if sum > 1.0 + TOL {
            return invalid_param(format!("atom weights sum to {sum} > 1"));
        }
        let mut entries = entries;
        while entries.last() == Some(&0.0) {
            entries.pop();
        }
        Ok(WeightVector {
            entries,
            mode: WeightMode::A,
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid_param("uniform weights need at least one entry");
        }
        Self::a1(vec![1.0 / n as f64; n])
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries.get(i).copied().unwrap_or(0.0)
    }

    pub fn l1(&self) -> f64 {
        self.entries.iter().sum()
    }

    /// `‖A - B‖₁`, the shorter vector padded with zeros.
    pub fn l1_distance(&self, other: &WeightVector) -> f64 {
        let n = self.len().max(other.len());
        (0..n).map(|i| (self.get(i) - other.get(i)).abs()).sum()
    }

    /// `Σ_{n > m} a_n` with one-based `n`.
    pub fn tail(&self, m: usize) -> f64 {
        self.entries.iter().skip(m).sum()
    }

    /// Entries sorted nonincreasing with zeros dropped, as an atom vector.
    pub fn sorted_atoms(&self) -> WeightVector {
        let mut e: Vec<f64> = self.entries.iter().copied().filter(|&x| x > 0.0).collect();
        e.sort_by(|a, b| b.total_cmp(a));
        WeightVector {
            entries: e,
            mode: WeightMode::A,
        }
    }
}

/// A finite mm-space with a distinguished point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointedSpace {
    pub space: FiniteMmSpace,
    pub base: usize,
}

impl PointedSpace {
    pub fn new(space: FiniteMmSpace, base: usize) -> Result<Self> {
        if base >= space.len() {
            return invalid_param(format!("base {base} out of range for {} points", space.len()));
        }
        Ok(PointedSpace { space, base })
    }
}
