//! Finite representations of pyramids, their decompositions, measurement
//! samples, distance bounds and limit heuristics.
//!
//! A [`PyramidApprox`] denotes one of:
//! * the pyramid generated by a list of spaces (a directed list is
//!   represented by its last element);
//! * the atom pyramid `𝒫_A`;
//! * the pyramid `P_Z` of a gapped sum `Z`, with its parts remembered;
//! * the direct sum of part pyramids, approximated by gapped sums with gap `k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::{tol_at, Budget};
use crate::construct::{atoms_generator, gapped_sum};
use crate::distances::box_distance_exact;
use crate::error::{invalid_param, MmError, Result};
use crate::flag::{Certified, CertifiedInterval, Flag};
use crate::graph::UnionFind;
use crate::invariants::{covering_number, obs_diameter, separation_distance, ObsOptions};
use crate::measures::prokhorov_flow_raw;
use crate::space::{DistMatrix, ExtendedFiniteMmSpace, FiniteMmSpace, Metric, PointedSpace, WeightVector, WeightedMetric};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PyramidKind {
    Generators { spaces: Vec<FiniteMmSpace>, directed: bool },
    Atoms(WeightVector),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Plain,
    /// The single generator is this gapped sum.
    Gapped {
        parts: Vec<PointedSpace>,
        weights: WeightVector,
        gap: f64,
    },
    /// The direct sum of these pyramids.
    Sum {
        parts: Vec<PyramidApprox>,
        weights: WeightVector,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PyramidApprox {
    pub kind: PyramidKind,
    pub provenance: Provenance,
}

impl PyramidApprox {
    pub fn generators(spaces: Vec<FiniteMmSpace>, directed: bool) -> Result<Self> {
        if spaces.is_empty() {
            return invalid_param("a generator list must be nonempty");
        }
        Ok(PyramidApprox {
            kind: PyramidKind::Generators { spaces, directed },
            provenance: Provenance::Plain,
        })
    }

    /// `P_X`.
    pub fn of_space(x: FiniteMmSpace) -> Self {
        PyramidApprox {
            kind: PyramidKind::Generators {
                spaces: vec![x],
                directed: true,
            },
            provenance: Provenance::Plain,
        }
    }

    pub fn atoms(a: WeightVector) -> Self {
        PyramidApprox {
            kind: PyramidKind::Atoms(a),
            provenance: Provenance::Plain,
        }
    }

    /// `P_Z` for the gapped sum `Z` of the given parts.
    pub fn gapped(parts: Vec<PointedSpace>, weights: WeightVector, gap: f64) -> Result<Self> {
        let z = gapped_sum(&parts, &weights, gap)?;
        Ok(PyramidApprox {
            kind: PyramidKind::Generators {
                spaces: vec![z],
                directed: true,
            },
            provenance: Provenance::Gapped { parts, weights, gap },
        })
    }

    /// Generator spaces, expanding atom pyramids at the given levels.
    pub fn generator_spaces(&self, atom_levels: &[usize]) -> Result<Vec<FiniteMmSpace>> {
        match &self.kind {
            PyramidKind::Generators { spaces, .. } => Ok(spaces.clone()),
            PyramidKind::Atoms(a) => {
                if atom_levels.is_empty() {
                    return invalid_param("atom pyramid needs expansion levels");
                }
                atom_levels.iter().map(|&n| atoms_generator(a, n)).collect()
            }
        }
    }

    fn top(&self) -> Option<&FiniteMmSpace> {
        match &self.kind {
            PyramidKind::Generators { spaces, directed } if *directed || spaces.len() == 1 => spaces.last(),
            _ => None,
        }
    }
}

/// Parts of an extended space with their weights in canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub weights: WeightVector,
    pub parts: Vec<FiniteMmSpace>,
    /// Whether every part was brought to an exact canonical form.
    pub canonical: bool,
}

const CANONICAL_POINTS: usize = 10;

/// Splits an extended space into its finite-distance components.
///
/// Parts are normalized and sorted by decreasing mass; equal masses are
/// ordered by a canonical encoding, and the points of each part are put in
/// canonical order, so isomorphic rebuilds decompose identically.
pub fn decompose_extended(z: &ExtendedFiniteMmSpace) -> Result<Decomposition> {
    let n = z.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if z.dist(i, j).is_finite() {
                uf.union(i, j);
            }
        }
    }
    let mut canonical = true;
    let mut parts: Vec<(f64, Vec<f64>, FiniteMmSpace)> = Vec::new();
    for comp in uf.components() {
        let (order, key, exact) = canonical_order(z, &comp);
        // summing in canonical order keeps relabeled inputs bit-identical
        let mass: f64 = order.iter().map(|&i| z.weight(i)).sum();
        canonical &= exact;
        let k = order.len();
        let mut d = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                d[a * k + b] = z.dist(order[a], order[b]);
            }
        }
        let labels = order.iter().map(|&i| z.labels()[i].clone()).collect();
        let w = order.iter().map(|&i| z.weight(i) / mass).collect();
        parts.push((mass, key, FiniteMmSpace::from_raw(labels, d, w)));
    }
    parts.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| cmp_keys(&a.1, &b.1)));
    let masses: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let total: f64 = masses.iter().sum();
    let masses = masses.iter().map(|m| m / total).collect();
    Ok(Decomposition {
        weights: WeightVector::a1(masses)?,
        parts: parts.into_iter().map(|p| p.2).collect(),
        canonical,
    })
}

fn cmp_keys(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let c = x.total_cmp(y);
        if c.is_ne() {
            return c;
        }
    }
    a.len().cmp(&b.len())
}

/// Orders the points of a component to minimize the encoding
/// `w(π_0), w(π_1), d(π_1, π_0), w(π_2), d(π_2, π_0), d(π_2, π_1), ...`.
fn canonical_order<M: WeightedMetric + ?Sized>(z: &M, comp: &[usize]) -> (Vec<usize>, Vec<f64>, bool) {
    let k = comp.len();
    if k > CANONICAL_POINTS {
        let mut order = comp.to_vec();
        let row = |i: usize| {
            let mut r: Vec<f64> = comp.iter().map(|&j| z.dist(i, j)).collect();
            r.sort_by(f64::total_cmp);
            r
        };
        order.sort_by(|&a, &b| z.weight(a).total_cmp(&z.weight(b)).then_with(|| cmp_keys(&row(a), &row(b))));
        let key = encode(z, &order);
        return (order, key, false);
    }
    let mut best: Option<(Vec<usize>, Vec<f64>)> = None;
    let mut perm = Vec::with_capacity(k);
    let mut used = vec![false; k];
    canon_rec(z, comp, &mut perm, &mut used, &mut Vec::new(), &mut best);
    let (order, key) = best.expect("nonempty component");
    (order, key, true)
}

fn encode<M: WeightedMetric + ?Sized>(z: &M, order: &[usize]) -> Vec<f64> {
    let mut key = Vec::new();
    for (a, &i) in order.iter().enumerate() {
        key.push(z.weight(i));
        for &j in &order[..a] {
            key.push(z.dist(i, j));
        }
    }
    key
}

fn canon_rec<M: WeightedMetric + ?Sized>(
    z: &M,
    comp: &[usize],
    perm: &mut Vec<usize>,
    used: &mut [bool],
    key: &mut Vec<f64>,
    best: &mut Option<(Vec<usize>, Vec<f64>)>,
) {
    if let Some((_, bk)) = best {
        if cmp_keys(key, &bk[..key.len()]).is_gt() {
            return;
        }
    }
    if perm.len() == comp.len() {
        let better = match best {
            None => true,
            Some((_, bk)) => cmp_keys(key, bk).is_lt(),
        };
        if better {
            *best = Some((perm.clone(), key.clone()));
        }
        return;
    }
    for c in 0..comp.len() {
        if used[c] {
            continue;
        }
        let i = comp[c];
        let mark = key.len();
        key.push(z.weight(i));
        for &j in perm.iter() {
            key.push(z.dist(i, j));
        }
        used[c] = true;
        perm.push(i);
        canon_rec(z, comp, perm, used, key, best);
        perm.pop();
        used[c] = false;
        key.truncate(mark);
    }
}

/// The direct sum of pyramids; its `k`-th generator glues the parts'
/// `k`-th generators with gap `k`. Atom parts are expanded at `atom_levels`.
pub fn direct_sum_pyramids(parts: &[PyramidApprox], a: &WeightVector, atom_levels: &[usize]) -> Result<PyramidApprox> {
    if parts.len() != a.len() || parts.is_empty() {
        return invalid_param("need one weight per part");
    }
    let lists: Vec<Vec<FiniteMmSpace>> = parts.iter().map(|p| p.generator_spaces(atom_levels)).collect::<Result<_>>()?;
    let count = lists.iter().map(|l| l.len()).max().unwrap_or(0);
    let mut spaces = Vec::with_capacity(count);
    for k in 1..=count {
        let gens: Vec<PointedSpace> = lists
            .iter()
            .map(|l| PointedSpace::new(l[k.min(l.len()) - 1].clone(), 0))
            .collect::<Result<_>>()?;
        spaces.push(gapped_sum(&gens, a, k as f64)?);
    }
    Ok(PyramidApprox {
        kind: PyramidKind::Generators { spaces, directed: true },
        provenance: Provenance::Sum {
            parts: parts.to_vec(),
            weights: a.clone(),
        },
    })
}

/// A finitely supported measure on `(ℝ^N, ℓ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeMeasure {
    pub points: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
}

impl CubeMeasure {
    /// The pushforward of `w` under `f`.
    pub fn from_map(f: &[Vec<f64>], w: &[f64]) -> Self {
        Self::from_atoms(f.iter().cloned().zip(w.iter().copied()).collect())
    }

    /// Merges coincident atoms and sorts the support.
    pub fn from_atoms(mut atoms: Vec<(Vec<f64>, f64)>) -> Self {
        atoms.sort_by(|a, b| cmp_keys(&a.0, &b.0));
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut mass: Vec<f64> = Vec::new();
        for (p, m) in atoms {
            if points.last() == Some(&p) {
                *mass.last_mut().unwrap() += m;
            } else {
                points.push(p);
                mass.push(m);
            }
        }
        CubeMeasure { points, mass }
    }
}

/// Prokhorov distance between two cube measures under the sup metric.
pub fn cube_prokhorov(a: &CubeMeasure, b: &CubeMeasure) -> f64 {
    let pts: Vec<&Vec<f64>> = a.points.iter().chain(&b.points).collect();
    let m = DistMatrix::from_fn(pts.len(), |i, j| sup_dist(pts[i], pts[j]));
    let mut mu = a.mass.clone();
    mu.resize(pts.len(), 0.0);
    let mut nu = vec![0.0; a.points.len()];
    nu.extend_from_slice(&b.mass);
    prokhorov_flow_raw(&m, &mu, &nu)
}

/// Pushforwards of generators under 1-Lipschitz maps into `B_R^N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSample {
    pub dim: usize,
    pub radius: f64,
    pub measures: Vec<CubeMeasure>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOptions {
    /// Maps drawn per generator, canonical ones included.
    pub maps_per_generator: usize,
    pub seed: u64,
    /// Levels at which atom pyramids are expanded.
    pub atom_levels: Vec<usize>,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            maps_per_generator: 12,
            seed: 0x5eed,
            atom_levels: vec![8, 16],
        }
    }
}

const CANONICAL_ANCHORS: usize = 8;

fn clip(v: f64, r: f64) -> f64 {
    v.clamp(-r, r)
}

/// A map into `(ℝ^N, ℓ∞)`: one coordinate row per point.
pub type CubeMap = Vec<Vec<f64>>;

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `max_{i,j} ‖f(i) - f(j)‖∞ - d(i, j)`; at most zero for 1-Lipschitz maps.
pub fn lipschitz_excess(x: &FiniteMmSpace, f: &CubeMap) -> f64 {
    let n = x.len();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max(sup_dist(&f[i], &f[j]) - x.dist(i, j));
        }
    }
    worst.max(0.0)
}

fn check_map(x: &FiniteMmSpace, f: &CubeMap, r: f64) -> Result<()> {
    if f.iter().flatten().any(|v| v.abs() > r) {
        return Err(MmError::Refusal("map leaves the cube".into()));
    }
    let e = lipschitz_excess(x, f);
    if e > tol_at(x.diameter()) {
        return Err(MmError::Refusal(format!("map is not 1-Lipschitz: excess {e}")));
    }
    Ok(())
}

/// `count` verified 1-Lipschitz maps `X → B_R^N`: the constant map,
/// canonical maps `x ↦ clip(d(x, a) - R)` over up to eight anchors, then
/// random McShane extensions from small anchor sets.
pub fn sample_maps(x: &FiniteMmSpace, dim: usize, radius: f64, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<CubeMap>> {
    if dim == 0 || !(radius > 0.0) {
        return invalid_param("dimension and radius must be positive");
    }
    let n = x.len();
    let anchors = n.min(CANONICAL_ANCHORS);
    if count < anchors + 1 {
        return invalid_param(format!("{count} maps per generator cannot hold the {} canonical maps", anchors + 1));
    }
    let mut maps: Vec<CubeMap> = vec![vec![vec![0.0; dim]; n]];
    for s in 0..anchors {
        maps.push(
            (0..n)
                .map(|i| (0..dim).map(|c| clip(x.dist(i, (s + c) % n) - radius, radius)).collect())
                .collect(),
        );
    }
    while maps.len() < count {
        let mut f = vec![vec![0.0; dim]; n];
        for c in 0..dim {
            let k = rng.gen_range(1..=n.min(3));
            let mut anchor: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
            anchor.sort_unstable();
            anchor.dedup();
            let raw: Vec<f64> = anchor.iter().map(|_| rng.gen_range(-radius..radius)).collect();
            // make the anchor values 1-Lipschitz, then extend
            let vals: Vec<f64> = anchor
                .iter()
                .map(|&s| {
                    anchor
                        .iter()
                        .zip(&raw)
                        .map(|(&t, &v)| v + x.dist(s, t))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            for (i, row) in f.iter_mut().enumerate() {
                let v = anchor
                    .iter()
                    .zip(&vals)
                    .map(|(&s, &v)| v + x.dist(i, s))
                    .fold(f64::INFINITY, f64::min);
                row[c] = clip(v, radius);
            }
        }
        maps.push(f);
    }
    for f in &maps {
        check_map(x, f, radius)?;
    }
    Ok(maps)
}

/// Samples `M(P; N, R)` over every generator of `P`.
pub fn measurement_sample(p: &PyramidApprox, dim: usize, radius: f64, opts: &SampleOptions) -> Result<MeasurementSample> {
    let gens = p.generator_spaces(&opts.atom_levels)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut measures = Vec::new();
    for x in &gens {
        for f in sample_maps(x, dim, radius, opts.maps_per_generator, &mut rng)? {
            measures.push(CubeMeasure::from_map(&f, x.weights()));
        }
    }
    Ok(MeasurementSample { dim, radius, measures })
}

/// Hausdorff distance between two samples under the Prokhorov metric.
pub fn hausdorff_prokhorov(a: &MeasurementSample, b: &MeasurementSample) -> f64 {
    let d: Vec<Vec<f64>> = a
        .measures
        .iter()
        .map(|m| b.measures.iter().map(|n| cube_prokhorov(m, n)).collect())
        .collect();
    let ab = d.iter().map(|row| row.iter().copied().fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    let ba = (0..b.measures.len())
        .map(|j| d.iter().map(|row| row[j]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    ab.max(ba)
}

/// `Σ_{N ≤ N_max} 2^{-N} (2N)^{-1} Ĥ_N` with `Ĥ_N` the sampled Hausdorff
/// distance at dimension and radius `N`. Not certified in either direction.
pub fn rho_empirical(p: &PyramidApprox, q: &PyramidApprox, n_max: usize, opts: &SampleOptions) -> Result<Certified<f64>> {
    let mut total = 0.0;
    for n in 1..=n_max {
        let r = n as f64;
        let sp = measurement_sample(p, n, r, opts)?;
        let sq = measurement_sample(q, n, r, opts)?;
        total += hausdorff_prokhorov(&sp, &sq) / (2f64.powi(n as i32) * 2.0 * r);
    }
    Ok(Certified::with_flag(total, Flag::Estimate))
}

/// An upper bound on `ρ` and the rule that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoBound {
    pub value: f64,
    pub rule: String,
}

/// Least bound from the applicable rules: identical representations,
/// `□` between top generators, `‖A - B‖₁` between atom pyramids, and the
/// part-wise bounds for sums and gapped sums.
pub fn rho_upper(p: &PyramidApprox, q: &PyramidApprox, budget: &Budget) -> Result<RhoBound> {
    let mut best: Option<RhoBound> = None;
    let mut offer = |value: f64, rule: &str| {
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(RhoBound {
                value,
                rule: rule.to_string(),
            });
        }
    };
    if p == q {
        offer(0.0, "identical");
    }
    if let (PyramidKind::Atoms(a), PyramidKind::Atoms(b)) = (&p.kind, &q.kind) {
        offer(a.l1_distance(b), "atoms-l1");
    }
    if matches!(p.provenance, Provenance::Plain | Provenance::Gapped { .. })
        && matches!(q.provenance, Provenance::Plain | Provenance::Gapped { .. })
    {
        if let (Some(x), Some(y)) = (p.top(), q.top()) {
            match box_distance_exact(x, y, budget) {
                Ok(b) => offer(b.value, "box"),
                Err(MmError::ResourceLimit(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    match (&p.provenance, &q.provenance) {
        (Provenance::Sum { parts: pp, weights: a }, Provenance::Sum { parts: qq, weights: b }) => {
            if let Some(v) = sum_bound(pp, a, qq, b, budget)? {
                offer(v, "sum");
            }
        }
        (Provenance::Gapped { parts, weights, gap }, Provenance::Sum { parts: qq, weights: b })
        | (Provenance::Sum { parts: qq, weights: b }, Provenance::Gapped { parts, weights, gap }) => {
            let pp: Vec<PyramidApprox> = parts.iter().map(|x| PyramidApprox::of_space(x.space.clone())).collect();
            if let Some(v) = sum_bound(&pp, weights, qq, b, budget)? {
                offer(v + 2f64.powf(-gap / 2.0), "gapped-sum");
            }
        }
        _ => {}
    }
    best.ok_or_else(|| MmError::Refusal("no bound rule applies to this pair".into()))
}

/// `min_M Σ_{n ≤ M} ρ(P_n, Q_n) + ½‖A - B‖₁ + ½ Σ_{n > M} (a_n + b_n)`.
fn sum_bound(pp: &[PyramidApprox], a: &WeightVector, qq: &[PyramidApprox], b: &WeightVector, budget: &Budget) -> Result<Option<f64>> {
    let half = 0.5 * a.l1_distance(b);
    let mut best = half + 0.5 * (a.tail(0) + b.tail(0));
    let mut acc = 0.0;
    for m in 0..pp.len().min(qq.len()) {
        match rho_upper(&pp[m], &qq[m], budget) {
            Ok(r) => acc += r.value,
            Err(MmError::Refusal(_)) => break,
            Err(e) => return Err(e),
        }
        best = best.min(acc + half + 0.5 * (a.tail(m + 1) + b.tail(m + 1)));
    }
    Ok(Some(best))
}

/// Sorted cluster masses of `tX` under single linkage at radius `√t`.
fn cluster_masses(x: &FiniteMmSpace, t: f64) -> Vec<f64> {
    let n = x.len();
    let eps = t.sqrt();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if t * x.dist(i, j) <= eps {
                uf.union(i, j);
            }
        }
    }
    let mut m: Vec<f64> = uf.components().iter().map(|c| c.iter().map(|&i| x.weight(i)).sum()).collect();
    m.sort_by(|a, b| b.total_cmp(a));
    m
}

/// Entries of `u` matched within `tol` by entries of `v` (both nonincreasing).
fn persistent(u: &[f64], v: &[f64], tol: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut used = vec![false; v.len()];
    for &a in u {
        if let Some(j) = (0..v.len()).find(|&j| !used[j] && (v[j] - a).abs() <= tol) {
            used[j] = true;
            out.push(a);
        }
    }
    out
}

/// Estimates `A` with `t𝒫 → 𝒫_A` as `t → 0`.
///
/// At each `t` the two largest generators are scaled by `t` and clustered
/// at radius `√t`; masses present in both are kept, masses that change
/// between them are dissipating. The vector must agree at the last two grid
/// values within `tol`.
pub fn atoms_limit_of_scaling(p: &PyramidApprox, t_grid: &[f64], tol: f64) -> Result<WeightVector> {
    let gens = match &p.kind {
        PyramidKind::Atoms(a) => return Ok(a.clone()),
        PyramidKind::Generators { spaces, .. } => spaces,
    };
    if t_grid.len() < 2 || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return invalid_param("need at least two positive scales");
    }
    let last = &gens[gens.len() - 1];
    let prev = &gens[gens.len().saturating_sub(2)];
    let vectors: Vec<Vec<f64>> = t_grid
        .iter()
        .map(|&t| persistent(&cluster_masses(last, t), &cluster_masses(prev, t), tol))
        .collect();
    let k = vectors.len();
    let (u, v) = (&vectors[k - 2], &vectors[k - 1]);
    let wu = WeightVector::atoms(u.clone())?;
    let wv = WeightVector::atoms(v.clone())?;
    if wu.l1_distance(&wv) > tol {
        return Err(MmError::Refusal(format!(
            "cluster masses did not stabilize: {u:?} then {v:?}"
        )));
    }
    Ok(wv)
}

/// `max_k Sep(X_k; κ)`: a lower bound for the pyramid.
pub fn sep_of_pyramid(p: &PyramidApprox, kappas: &[f64], atom_levels: &[usize], budget: &Budget) -> Result<Certified<f64>> {
    let mut best = 0.0f64;
    for x in p.generator_spaces(atom_levels)? {
        best = best.max(separation_distance(&x, kappas, budget)?.value);
    }
    Ok(Certified::with_flag(best, Flag::Lower))
}

/// Join of the generators' observable-diameter intervals: a lower bound for the pyramid.
pub fn obsdiam_of_pyramid(
    p: &PyramidApprox,
    kappa: f64,
    atom_levels: &[usize],
    opts: &ObsOptions,
    budget: &Budget,
) -> Result<Certified<CertifiedInterval>> {
    let mut acc = CertifiedInterval::new(0.0, 0.0);
    for x in p.generator_spaces(atom_levels)? {
        acc = acc.join(&obs_diameter(&x, kappa, opts, budget)?);
    }
    Ok(Certified::with_flag(acc, Flag::Lower))
}

/// Covering numbers along the generator sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovSequence {
    pub values: Vec<usize>,
    pub value: Certified<usize>,
    /// Set when the values never decrease and end above where they start.
    pub diverging: bool,
}

pub fn cov_of_pyramid(p: &PyramidApprox, r: f64, kappa: f64, atom_levels: &[usize], budget: &Budget) -> Result<CovSequence> {
    let values: Vec<usize> = p
        .generator_spaces(atom_levels)?
        .iter()
        .map(|x| covering_number(x, r, kappa, budget).map(|c| c.count))
        .collect::<Result<_>>()?;
    let max = values.iter().copied().max().unwrap_or(0);
    let diverging = values.windows(2).all(|w| w[0] <= w[1]) && values.last() > values.first();
    Ok(CovSequence {
        value: Certified::with_flag(max, Flag::Lower),
        values,
        diverging,
    })
}

/// Greatest weight sum merged from weighted atom vectors: `Σ a_n B_n`, sorted.
pub fn merge_atoms(a: &WeightVector, bs: &[WeightVector]) -> Result<WeightVector> {
    if a.len() != bs.len() {
        return invalid_param("need one atom vector per weight");
    }
    let mut all: Vec<f64> = Vec::new();
    for (k, b) in bs.iter().enumerate() {
        all.extend(b.entries().iter().map(|&x| a.get(k) * x));
    }
    all.retain(|&x| x > 0.0);
    all.sort_by(|x, y| y.total_cmp(x));
    WeightVector::atoms(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{direct_sum, dissipation_space, lp_power};
    use crate::maps::mm_isomorphic;

    fn path3() -> FiniteMmSpace {
        FiniteMmSpace::from_matrix(
            vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]],
            vec![0.25, 0.5, 0.25],
        )
        .unwrap()
    }

    #[test]
    fn decomposition_recovers_parts() {
        let a = WeightVector::a1(vec![0.3, 0.7]).unwrap();
        let z = direct_sum(&[path3(), FiniteMmSpace::two_point(2.0, 0.5).unwrap()], &a).unwrap();
        let d = decompose_extended(&z).unwrap();
        assert!(d.canonical);
        assert_eq!(d.weights.entries(), &[0.7, 0.3]);
        let b = Budget::default();
        assert!(mm_isomorphic(&d.parts[0], &FiniteMmSpace::two_point(2.0, 0.5).unwrap(), &b).unwrap().is_some());
        assert!(mm_isomorphic(&d.parts[1], &path3(), &b).unwrap().is_some());
    }

    #[test]
    fn decomposition_ignores_labels_and_order() {
        let a = WeightVector::a1(vec![0.5, 0.5]).unwrap();
        let z = direct_sum(&[path3(), FiniteMmSpace::two_point(2.0, 0.5).unwrap()], &a).unwrap();
        let perm = [4, 2, 0, 3, 1];
        let labels: Vec<String> = (0..5).map(|i| format!("p{i}")).collect();
        let w = z.permuted(&perm, labels).unwrap();
        let (d1, d2) = (decompose_extended(&z).unwrap(), decompose_extended(&w).unwrap());
        assert_eq!(d1.weights, d2.weights);
        for (p, q) in d1.parts.iter().zip(&d2.parts) {
            assert_eq!(p.dist_flat(), q.dist_flat());
            assert_eq!(p.weights(), q.weights());
        }
    }

    #[test]
    fn atom_pyramid_bounds() {
        let b = Budget::default();
        let p = PyramidApprox::atoms(WeightVector::atoms(vec![1.0]).unwrap());
        let q = PyramidApprox::atoms(WeightVector::atoms(vec![0.5, 0.5]).unwrap());
        let r = rho_upper(&p, &q, &b).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(rho_upper(&p, &p, &b).unwrap().value, 0.0);
    }

    #[test]
    fn single_generators_use_box() {
        let b = Budget::default();
        let p = PyramidApprox::of_space(FiniteMmSpace::one_point());
        let q = PyramidApprox::of_space(FiniteMmSpace::two_point(0.2, 0.5).unwrap());
        let r = rho_upper(&p, &q, &b).unwrap();
        assert_eq!((r.value, r.rule.as_str()), (0.2, "box"));
    }

    #[test]
    fn sum_of_two_point_pyramids() {
        let one = PyramidApprox::atoms(WeightVector::atoms(vec![1.0]).unwrap());
        let a = WeightVector::a1(vec![0.5, 0.5]).unwrap();
        let s = direct_sum_pyramids(&[one.clone(), one], &a, &[4]).unwrap();
        let gens = s.generator_spaces(&[]).unwrap();
        assert_eq!(gens.len(), 1);
        assert_eq!(gens[0].len(), 2);
        assert_eq!(gens[0].dist(0, 1), 1.0);
        assert!(direct_sum_pyramids(&[PyramidApprox::atoms(WeightVector::atoms(vec![1.0]).unwrap())], &WeightVector::a1(vec![1.0]).unwrap(), &[]).is_err());
    }

    #[test]
    fn identical_samples_have_zero_distance() {
        let p = PyramidApprox::of_space(path3());
        let r = rho_empirical(&p, &p, 2, &SampleOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.flag, Flag::Estimate);
    }

    #[test]
    fn sample_contains_separated_atoms() {
        let half = PyramidApprox::atoms(WeightVector::atoms(vec![0.5, 0.5]).unwrap());
        let opts = SampleOptions {
            atom_levels: vec![8],
            ..SampleOptions::default()
        };
        let s = measurement_sample(&half, 2, 3.0, &opts).unwrap();
        let found = s.measures.iter().any(|m| {
            m.mass == vec![0.5, 0.5]
                && m.points[0].iter().zip(&m.points[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) == 6.0
        });
        assert!(found);
        let tiny = SampleOptions {
            maps_per_generator: 1,
            ..opts
        };
        assert!(measurement_sample(&half, 2, 3.0, &tiny).is_err());
    }

    #[test]
    fn atoms_limit_of_gapped_families() {
        let a = WeightVector::atoms(vec![0.5, 0.25, 0.25]).unwrap();
        let gens: Vec<FiniteMmSpace> = [8, 16].iter().map(|&n| atoms_generator(&a, n).unwrap()).collect();
        let p = PyramidApprox::generators(gens, true).unwrap();
        let grid = [0.5, 0.1, 0.05];
        assert_eq!(atoms_limit_of_scaling(&p, &grid, 1e-9).unwrap(), a);
        let d: Vec<FiniteMmSpace> = [4, 8, 16].iter().map(|&n| dissipation_space(n).unwrap()).collect();
        let dp = PyramidApprox::generators(d, true).unwrap();
        assert!(atoms_limit_of_scaling(&dp, &grid, 1e-9).unwrap().is_empty());
        let single = PyramidApprox::of_space(path3());
        assert_eq!(atoms_limit_of_scaling(&single, &[0.01, 0.001], 1e-9).unwrap().entries(), &[1.0]);
    }

    #[test]
    fn partially_dissipating_atoms() {
        let a = WeightVector::atoms(vec![0.5, 0.25]).unwrap();
        let gens: Vec<FiniteMmSpace> = [8, 16].iter().map(|&n| atoms_generator(&a, n).unwrap()).collect();
        let p = PyramidApprox::generators(gens, true).unwrap();
        assert_eq!(atoms_limit_of_scaling(&p, &[0.5, 0.1], 1e-9).unwrap(), a);
    }

    #[test]
    fn pyramid_invariants_of_dissipation() {
        let b = Budget::default();
        let d: Vec<FiniteMmSpace> = [4, 8, 16].iter().map(|&n| dissipation_space(n).unwrap()).collect();
        let p = PyramidApprox::generators(d, true).unwrap();
        let c = cov_of_pyramid(&p, 0.5, 0.25, &[], &b).unwrap();
        assert_eq!(c.values, vec![3, 6, 12]);
        assert!(c.diverging);
        assert_eq!(sep_of_pyramid(&p, &[0.25, 0.25], &[], &b).unwrap().value, 16.0);
        let x = FiniteMmSpace::two_point(1.0, 0.5).unwrap();
        let powers: Vec<FiniteMmSpace> = (1..=3).map(|n| lp_power(&x, f64::INFINITY, n, &b).unwrap()).collect();
        let q = PyramidApprox::generators(powers, true).unwrap();
        let c = cov_of_pyramid(&q, 1.5, 0.1, &[], &b).unwrap();
        assert_eq!(c.values, vec![1, 1, 1]);
        assert!(!c.diverging);
        let o = obsdiam_of_pyramid(&q, 0.3, &[], &ObsOptions::default(), &b).unwrap();
        assert_eq!(o.flag, Flag::Lower);
        assert!(o.value.lower >= 1.0);
    }

    #[test]
    fn merge_identity() {
        let a = WeightVector::a1(vec![0.5, 0.5]).unwrap();
        let b1 = WeightVector::atoms(vec![0.5, 0.5]).unwrap();
        let b2 = WeightVector::atoms(vec![1.0]).unwrap();
        let m = merge_atoms(&a, &[b1.clone(), b2.clone()]).unwrap();
        assert_eq!(m.entries(), &[0.5, 0.25, 0.25]);
        // a part with more than one atom breaks A = Σ a_n B_n
        assert_ne!(m.entries(), a.entries());
        let trivial = merge_atoms(&a, &[b2.clone(), b2]).unwrap();
        assert_eq!(trivial.entries(), a.entries());
    }
}
