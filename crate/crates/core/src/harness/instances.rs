//! Serializable check instances and their pure evaluation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::construct::{
    cycle_space, direct_sum, direct_sum_extended, dissipation_space, gapped_sum, lp_power, lp_product, lp_product_extended,
    restrict_normalize, scale, wedge_sum,
};
use crate::distances::{box_distance_exact, certify_mm_iso, distortion, find_mm_iso};
use crate::error::{invalid_param, MmError, Result};
use crate::flag::Flag;
use crate::invariants::{covering_number, obs_diameter, partial_diameter_space, separation_distance, ObsOptions};
use crate::maps::{lipschitz_dominates, mm_isomorphic};
use crate::measures::{prokhorov_flow, prokhorov_subset_oracle, total_variation, MeasureOnSpace};
use crate::pyramids::{
    atoms_limit_of_scaling, cov_of_pyramid, cube_prokhorov, decompose_extended, direct_sum_pyramids, lipschitz_excess,
    merge_atoms, rho_empirical, rho_upper, sample_maps, CubeMap, CubeMeasure, PyramidApprox, SampleOptions,
};
use crate::space::{ExtendedFiniteMmSpace, FiniteMmSpace, Metric, PointedSpace, WeightVector, WeightedMetric};

/// Tolerance on inequality slack.
pub const SLACK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `lhs ≤ rhs` up to [`SLACK_TOL`].
    Le,
    /// `lhs < rhs`.
    Lt,
    /// Bitwise equality.
    Eq,
    /// `|lhs - rhs| ≤ tol`.
    Close(f64),
    /// Recorded only.
    Report,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
}

impl Outcome {
    fn new(check: &str, lhs: f64, rhs: f64, relation: Relation) -> Self {
        Outcome {
            check: check.to_string(),
            lhs,
            rhs,
            relation,
        }
    }

    pub fn slack(&self) -> f64 {
        match self.relation {
            Relation::Eq if self.lhs == self.rhs => 0.0,
            Relation::Eq => -(self.lhs - self.rhs).abs(),
            Relation::Close(tol) => tol - (self.lhs - self.rhs).abs(),
            _ => self.rhs - self.lhs,
        }
    }

    pub fn holds(&self) -> bool {
        match self.relation {
            Relation::Le => self.rhs - self.lhs >= -SLACK_TOL,
            Relation::Lt => self.lhs < self.rhs,
            Relation::Eq => self.lhs == self.rhs,
            Relation::Close(tol) => (self.lhs - self.rhs).abs() <= tol,
            Relation::Report => true,
        }
    }

    pub fn asserted(&self) -> bool {
        self.relation != Relation::Report
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Spearman rank correlation; zero when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

/// One self-contained unit of work in a check suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Instance {
    Prokhorov {
        space: FiniteMmSpace,
        mu: Vec<f64>,
        nu: Vec<f64>,
    },
    MetricLemmas {
        space: FiniteMmSpace,
        mu: Vec<f64>,
        nu: Vec<f64>,
        perturbed: FiniteMmSpace,
        search_eps: f64,
        subset: Vec<usize>,
        seed: u64,
    },
    SumBounds {
        parts: Vec<FiniteMmSpace>,
        a: WeightVector,
        others: Vec<FiniteMmSpace>,
        b: WeightVector,
        shared: usize,
        gap: f64,
        maps: usize,
        seed: u64,
    },
    InvariantLemmas {
        space: FiniteMmSpace,
        coarse: FiniteMmSpace,
        kappa: f64,
        cov_params: Vec<(f64, f64)>,
        scales: Vec<f64>,
    },
    Associativity {
        parts: Vec<FiniteMmSpace>,
        a: WeightVector,
        groups: Vec<usize>,
    },
    Distributivity {
        xs: Vec<FiniteMmSpace>,
        a: WeightVector,
        ys: Vec<FiniteMmSpace>,
        b: WeightVector,
        p: f64,
    },
    ScaleSum {
        parts: Vec<FiniteMmSpace>,
        a: WeightVector,
        gap: f64,
        t: f64,
    },
    Dissipation {
        n_list: Vec<usize>,
    },
    BallDecay {
        base: FiniteMmSpace,
        p: f64,
        r: f64,
        n_list: Vec<usize>,
    },
    Wedge {
        m: usize,
        n_list: Vec<usize>,
        alpha: f64,
        seed: u64,
    },
    AtomsRecovery {
        parts: Vec<FiniteMmSpace>,
        a: WeightVector,
        levels: Vec<usize>,
        grid: Vec<f64>,
    },
    RoundTrip {
        parts: Vec<FiniteMmSpace>,
        a: WeightVector,
        perm: Vec<usize>,
    },
    Merge {
        a: WeightVector,
        bs: Vec<WeightVector>,
        differs_from_a: bool,
    },
}

impl Instance {
    /// Evaluates every relation this instance asserts or reports.
    pub fn evaluate(&self, budget: &Budget) -> Result<Vec<Outcome>> {
        match self {
            Instance::Prokhorov { space, mu, nu } => {
                let m = MeasureOnSpace::new(space, mu.clone())?;
                let n = MeasureOnSpace::new(space, nu.clone())?;
                let flow = prokhorov_flow(&m, &n)?;
                let oracle = prokhorov_subset_oracle(&m, &n, budget)?;
                Ok(vec![Outcome::new("flow-vs-oracle", flow, oracle, Relation::Close(1e-9))])
            }
            Instance::MetricLemmas {
                space,
                mu,
                nu,
                perturbed,
                search_eps,
                subset,
                seed,
            } => metric_lemmas(space, mu, nu, perturbed, *search_eps, subset, *seed, budget),
            Instance::SumBounds {
                parts,
                a,
                others,
                b,
                shared,
                gap,
                maps,
                seed,
            } => sum_bounds(parts, a, others, b, *shared, *gap, *maps, *seed, budget),
            Instance::InvariantLemmas {
                space,
                coarse,
                kappa,
                cov_params,
                scales,
            } => invariant_lemmas(space, coarse, *kappa, cov_params, scales, budget),
            Instance::Associativity { parts, a, groups } => {
                let flat = direct_sum(parts, a)?;
                let k = groups.iter().copied().max().map_or(0, |g| g + 1);
                let mut inner = Vec::new();
                let mut alpha = Vec::new();
                for g in 0..k {
                    let members: Vec<usize> = (0..parts.len()).filter(|&n| groups[n] == g).collect();
                    if members.is_empty() {
                        continue;
                    }
                    let mass: f64 = members.iter().map(|&n| a.get(n)).sum();
                    let mut w: Vec<f64> = members.iter().map(|&n| a.get(n) / mass).collect();
                    let rest = 1.0 - w.iter().sum::<f64>();
                    w[0] += rest;
                    let sub: Vec<FiniteMmSpace> = members.iter().map(|&n| parts[n].clone()).collect();
                    inner.push(direct_sum(&sub, &WeightVector::a1(w)?)?);
                    alpha.push(mass);
                }
                let rest = 1.0 - alpha.iter().sum::<f64>();
                alpha[0] += rest;
                let grouped = direct_sum_extended(&inner, &WeightVector::a1(alpha)?)?;
                let iso = mm_isomorphic(&flat, &grouped, budget)?.is_some();
                Ok(vec![Outcome::new("associativity", flag(iso), 1.0, Relation::Eq)])
            }
            Instance::Distributivity { xs, a, ys, b, p } => {
                let left = lp_product_extended(&direct_sum(xs, a)?, &direct_sum(ys, b)?, *p, budget)?;
                let mut prods = Vec::new();
                let mut w = Vec::new();
                for (n, x) in xs.iter().enumerate() {
                    for (m, y) in ys.iter().enumerate() {
                        prods.push(lp_product(x, y, *p, budget)?);
                        w.push(a.get(n) * b.get(m));
                    }
                }
                let rest = 1.0 - w.iter().sum::<f64>();
                w[0] += rest;
                let right = direct_sum(&prods, &WeightVector::a1(w)?)?;
                let iso = mm_isomorphic(&left, &right, budget)?.is_some();
                Ok(vec![Outcome::new("distributivity", flag(iso), 1.0, Relation::Eq)])
            }
            Instance::ScaleSum { parts, a, gap, t } => {
                let pointed = pointed(parts)?;
                let left = scale(&gapped_sum(&pointed, a, *gap)?, *t)?;
                let scaled: Vec<FiniteMmSpace> = parts.iter().map(|x| scale(x, *t)).collect::<Result<_>>()?;
                let right = gapped_sum(&pointed_owned(scaled)?, a, t * gap)?;
                let iso = mm_isomorphic(&left, &right, budget)?.is_some();
                Ok(vec![Outcome::new("scaling-commutes-with-sums", flag(iso), 1.0, Relation::Eq)])
            }
            Instance::Dissipation { n_list } => dissipation(n_list, budget),
            Instance::BallDecay { base, p, r, n_list } => ball_decay(base, *p, *r, n_list, budget),
            Instance::Wedge { m, n_list, alpha, seed } => wedge(*m, n_list, *alpha, *seed, budget),
            Instance::AtomsRecovery { parts, a, levels, grid } => {
                let pointed = pointed(parts)?;
                let gens: Vec<FiniteMmSpace> = levels.iter().map(|&k| gapped_sum(&pointed, a, k as f64)).collect::<Result<_>>()?;
                let p = PyramidApprox::generators(gens, true)?;
                let got = atoms_limit_of_scaling(&p, grid, 1e-9)?;
                let err = got.l1_distance(&a.sorted_atoms());
                Ok(vec![Outcome::new("atoms-recovery", err, 1e-6, Relation::Le)])
            }
            Instance::RoundTrip { parts, a, perm } => round_trip(parts, a, perm, budget),
            Instance::Merge { a, bs, differs_from_a } => {
                let merged = merge_atoms(a, bs)?;
                let inner: Vec<ExtendedFiniteMmSpace> = bs.iter().map(atom_representative).collect::<Result<_>>()?;
                let left = direct_sum_extended(&inner, a)?;
                let right = atom_representative(&merged)?;
                let iso = mm_isomorphic(&left, &right, budget)?.is_some();
                let mut out = vec![
                    Outcome::new("merge-identity", flag(iso), 1.0, Relation::Eq),
                    Outcome::new("merge-mass", merged.l1(), 1.0, Relation::Close(1e-12)),
                ];
                if *differs_from_a {
                    out.push(Outcome::new("merge-differs", 0.0, merged.l1_distance(&a.sorted_atoms()), Relation::Lt));
                }
                Ok(out)
            }
        }
    }
}

fn pointed(parts: &[FiniteMmSpace]) -> Result<Vec<PointedSpace>> {
    parts.iter().map(|x| PointedSpace::new(x.clone(), 0)).collect()
}

fn pointed_owned(parts: Vec<FiniteMmSpace>) -> Result<Vec<PointedSpace>> {
    parts.into_iter().map(|x| PointedSpace::new(x, 0)).collect()
}

/// `Σ {*}^{b_n}`, the smallest space generating `𝒫_B` when `‖B‖₁ = 1`.
fn atom_representative(b: &WeightVector) -> Result<ExtendedFiniteMmSpace> {
    let e: Vec<f64> = b.entries().iter().copied().filter(|&x| x > 0.0).collect();
    let total: f64 = e.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return invalid_param("atom representative needs total mass one");
    }
    let mut e = e;
    let rest = 1.0 - e.iter().sum::<f64>();
    e[0] += rest;
    let ones = vec![FiniteMmSpace::one_point(); e.len()];
    direct_sum(&ones, &WeightVector::a1(e)?)
}

fn with_weights(x: &FiniteMmSpace, w: &[f64]) -> Result<FiniteMmSpace> {
    FiniteMmSpace::new(x.labels().to_vec(), x.dist_rows(), w.to_vec())
}

#[allow(clippy::too_many_arguments)]
fn metric_lemmas(
    x: &FiniteMmSpace,
    mu: &[f64],
    nu: &[f64],
    y: &FiniteMmSpace,
    search_eps: f64,
    subset: &[usize],
    seed: u64,
    budget: &Budget,
) -> Result<Vec<Outcome>> {
    let m = MeasureOnSpace::new(x, mu.to_vec())?;
    let n = MeasureOnSpace::new(x, nu.to_vec())?;
    let dp = prokhorov_flow(&m, &n)?;
    let tv = total_variation(&m, &n)?;
    let mut out = vec![Outcome::new("prokhorov-le-tv", dp, tv, Relation::Le)];

    let (xm, xn) = (with_weights(x, mu)?, with_weights(x, nu)?);
    let b = box_distance_exact(&xm, &xn, budget)?.value;
    out.push(Outcome::new("box-le-2prokhorov", b, 2.0 * dp, Relation::Le));
    out.push(Outcome::new("box-self", box_distance_exact(x, x, budget)?.value, 0.0, Relation::Eq));

    // the identity X → Y certifies at the larger of its distortion and Prokhorov error
    let id: Vec<usize> = (0..x.len()).collect();
    let pairs: Vec<(usize, usize)> = id.iter().map(|&i| (i, i)).collect();
    let mut push = vec![0.0; y.len()];
    for i in 0..x.len() {
        push[i] += x.weight(i);
    }
    let py = prokhorov_flow(&MeasureOnSpace::new(y, push)?, &MeasureOnSpace::of(y))?;
    let eps = distortion(&pairs, x, y).max(py);
    certify_mm_iso(&id, x, y, eps, budget)?;
    let bxy = box_distance_exact(x, y, budget)?.value;
    out.push(Outcome::new("box-le-3eps", bxy, 3.0 * eps, Relation::Le));
    if let Some(found) = find_mm_iso(x, y, search_eps, budget)? {
        if found.exact {
            out.push(Outcome::new("box-le-3eps-search", bxy, 3.0 * search_eps, Relation::Le));
        }
    }

    let a = restrict_normalize(x, subset)?;
    let mass: f64 = subset.iter().map(|&i| x.weight(i)).sum();
    let ba = box_distance_exact(&a, x, budget)?.value;
    out.push(Outcome::new("box-restriction", ba, 4.0 * (1.0 - mass), Relation::Le));

    let opts = SampleOptions {
        seed,
        ..SampleOptions::default()
    };
    let rho = rho_empirical(&PyramidApprox::of_space(x.clone()), &PyramidApprox::of_space(y.clone()), 1, &opts)?;
    out.push(Outcome::new("rho-empirical-vs-box", rho.value, bxy, Relation::Report));
    Ok(out)
}

/// Finite form of the sum lemmas with proof-map witnesses.
///
/// `P_Z` with `Z` the gapped sum of `parts` (weights `a`, gap `gap`) is
/// compared with `Σ 𝒫_{Y_n}^{b_n}`, where `Y_n` equals `parts[n]` for
/// `n < shared`. For each sampled measure on either side an explicit element
/// of the other measurement set is built as in the proof, so the measured
/// Prokhorov distances bound the true directed distances from above.
#[allow(clippy::too_many_arguments)]
fn sum_bounds(
    parts: &[FiniteMmSpace],
    a: &WeightVector,
    others: &[FiniteMmSpace],
    b: &WeightVector,
    shared: usize,
    gap: f64,
    maps: usize,
    seed: u64,
    budget: &Budget,
) -> Result<Vec<Outcome>> {
    let ys: Vec<FiniteMmSpace> = parts[..shared].iter().chain(others).cloned().collect();
    if ys.len() != b.len() || parts.len() != a.len() || shared == 0 || shared > parts.len() {
        return invalid_param("inconsistent sum-bound instance");
    }
    let pointed = pointed(parts)?;
    let z = gapped_sum(&pointed, a, gap)?;
    let mut off = vec![0];
    for x in parts {
        off.push(off.last().unwrap() + x.len());
    }
    let m_r = (gap / 2.0).floor() as usize;
    let levels = m_r.min(2);
    let bound = |m: usize| a.l1_distance(b) + a.tail(m) + b.tail(m);
    let mut out = Vec::new();
    // worst[m-1][k-1]
    let mut worst = vec![vec![0.0f64; levels]; shared];
    for k in 1..=levels {
        let r = k as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let z_maps = sample_maps(&z, k, r, maps, &mut rng)?;
        let y_maps: Vec<Vec<CubeMap>> = ys.iter().map(|y| sample_maps(y, k, r, maps, &mut rng)).collect::<Result<_>>()?;
        let origin = vec![0.0; k];
        for m in 1..=shared {
            let mut excess = 0.0f64;
            for f in &z_maps {
                let mu = CubeMeasure::from_map(f, z.weights());
                let mut atoms = Vec::new();
                for (n, y) in ys.iter().enumerate() {
                    if n < m {
                        for i in 0..y.len() {
                            atoms.push((f[off[n] + i].clone(), b.get(n) * y.weight(i)));
                        }
                    } else {
                        atoms.push((origin.clone(), b.get(n)));
                    }
                }
                let nu = CubeMeasure::from_atoms(atoms);
                worst[m - 1][k - 1] = worst[m - 1][k - 1].max(cube_prokhorov(&mu, &nu));
            }
            for i in 0..maps {
                let mut atoms = Vec::new();
                for (n, y) in ys.iter().enumerate() {
                    for j in 0..y.len() {
                        atoms.push((y_maps[n][i][j].clone(), b.get(n) * y.weight(j)));
                    }
                }
                let mu = CubeMeasure::from_atoms(atoms);
                let mut phi: CubeMap = Vec::with_capacity(z.len());
                for (n, x) in parts.iter().enumerate() {
                    for j in 0..x.len() {
                        phi.push(if n < m { y_maps[n][i][j].clone() } else { origin.clone() });
                    }
                }
                excess = excess.max(lipschitz_excess(&z, &phi));
                let nu = CubeMeasure::from_map(&phi, z.weights());
                worst[m - 1][k - 1] = worst[m - 1][k - 1].max(cube_prokhorov(&mu, &nu));
            }
            out.push(Outcome::new("witness-lipschitz", excess, 0.0, Relation::Le));
            out.push(Outcome::new("level-bound", worst[m - 1][k - 1], bound(m), Relation::Le));
        }
    }
    let weight = |k: usize| 1.0 / (2f64.powi(k as i32) * 2.0 * k as f64);
    let tail_gap = 2f64.powf(-gap / 2.0);
    let mut best_rhs = f64::INFINITY;
    for m in 1..=shared {
        let bm = bound(m);
        let mut lhs = 2f64.powi(-(m_r as i32 + 1));
        for k in 1..=m_r {
            lhs += weight(k) * if k <= levels { worst[m - 1][k - 1] } else { bm };
        }
        let rhs = 0.5 * bm + tail_gap;
        best_rhs = best_rhs.min(rhs);
        out.push(Outcome::new("series-bound", lhs, rhs, Relation::Le));
    }
    let p = PyramidApprox::gapped(pointed, a.clone(), gap)?;
    let q_parts: Vec<PyramidApprox> = ys.iter().map(|y| PyramidApprox::of_space(y.clone())).collect();
    let q = direct_sum_pyramids(&q_parts, b, &[])?;
    let up = rho_upper(&p, &q, budget)?.value;
    out.push(Outcome::new("rho-upper", up, best_rhs, Relation::Le));
    let opts = SampleOptions {
        seed,
        ..SampleOptions::default()
    };
    let est = rho_empirical(&p, &q, 1, &opts)?.value;
    out.push(Outcome::new("rho-empirical-vs-upper", est, up, Relation::Report));
    Ok(out)
}

fn invariant_lemmas(
    x: &FiniteMmSpace,
    coarse: &FiniteMmSpace,
    kappa: f64,
    cov_params: &[(f64, f64)],
    scales: &[f64],
    budget: &Budget,
) -> Result<Vec<Outcome>> {
    let opts = ObsOptions::default();
    let mut out = Vec::new();
    let obs = obs_diameter(x, kappa, &opts, budget)?;
    let sep = separation_distance(x, &[kappa, kappa], budget)?.value;
    let pd = partial_diameter_space(x, 1.0 - kappa, budget)?;
    for &t in scales {
        let tx = scale(x, t)?;
        let o = obs_diameter(&tx, kappa, &opts, budget)?;
        out.push(Outcome::new("scale-obsdiam-lower", o.lower, t * obs.lower, Relation::Eq));
        out.push(Outcome::new("scale-obsdiam-upper", o.upper, t * obs.upper, Relation::Eq));
        let s = separation_distance(&tx, &[kappa, kappa], budget)?.value;
        out.push(Outcome::new("scale-sep", s, t * sep, Relation::Eq));
        let p = partial_diameter_space(&tx, 1.0 - kappa, budget)?;
        out.push(Outcome::new("scale-partial-diameter", p, t * pd, Relation::Eq));
    }
    if 2.0 * kappa < 1.0 {
        let wide = obs_diameter(x, 2.0 * kappa, &opts, budget)?;
        out.push(Outcome::new("obsdiam-2k-le-sep", wide.lower, sep, Relation::Le));
    }
    out.push(Outcome::new("sep-le-obsdiam", sep, obs.upper, Relation::Le));

    if lipschitz_dominates(x, coarse, budget)?.is_none() {
        return Err(MmError::Refusal("constructed domination pair was not verified".into()));
    }
    for &(r, k) in cov_params {
        let cx = covering_number(coarse, r, k, budget)?;
        let cy = covering_number(x, r, k, budget)?;
        if cx.flag == Flag::Exact && cy.flag == Flag::Exact {
            out.push(Outcome::new("cov-monotone", cx.count as f64, cy.count as f64, Relation::Le));
        }
    }
    Ok(out)
}

fn dissipation(n_list: &[usize], budget: &Budget) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    let (mut seps, mut masses, mut ns) = (Vec::new(), Vec::new(), Vec::new());
    let mut spaces = Vec::new();
    for &n in n_list {
        let d = dissipation_space(n)?;
        let nf = n as f64;
        let sep = separation_distance(&d, &[0.25, 0.25], budget)?.value;
        out.push(Outcome::new("sep", sep, nf, Relation::Eq));
        let cov = covering_number(&d, 0.5, 0.25, budget)?;
        out.push(Outcome::new("cov", cov.count as f64, (3 * n).div_ceil(4) as f64, Relation::Eq));
        // singleton partition: total mass, mutual distance, largest part
        let total: f64 = d.weights().iter().sum();
        out.push(Outcome::new("partition-mass", total, 1.0, Relation::Close(1e-12)));
        let min_sep = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| d.dist(i, j))
            .fold(f64::INFINITY, f64::min);
        let max_mass = d.weights().iter().copied().fold(0.0, f64::max);
        seps.push(min_sep);
        masses.push(max_mass);
        ns.push(nf);
        spaces.push(d);
    }
    if ns.len() > 1 {
        out.push(Outcome::new("separation-trend", spearman(&ns, &seps), 1.0, Relation::Eq));
        out.push(Outcome::new("part-mass-trend", spearman(&ns, &masses), -1.0, Relation::Eq));
        let p = PyramidApprox::generators(spaces, true)?;
        let c = cov_of_pyramid(&p, 0.5, 0.25, &[], budget)?;
        out.push(Outcome::new("cov-diverges", flag(c.diverging), 1.0, Relation::Eq));
    }
    Ok(out)
}

/// `sup_x μ(U_r(x))` with open balls.
fn sup_ball_mass(x: &FiniteMmSpace, r: f64) -> f64 {
    (0..x.len())
        .map(|i| (0..x.len()).filter(|&j| x.dist(i, j) < r).map(|j| x.weight(j)).sum::<f64>())
        .fold(0.0, f64::max)
}

fn ball_decay(base: &FiniteMmSpace, p: f64, r: f64, n_list: &[usize], budget: &Budget) -> Result<Vec<Outcome>> {
    if !(r > 0.0 && r < base.diameter() / 2.0) {
        return invalid_param(format!("radius {r} must lie in (0, diam/2)"));
    }
    let mut n0 = 1;
    loop {
        let pw = lp_power(base, p, n0, budget)?;
        if pw.diameter() > 2.0 * r {
            break;
        }
        n0 += 1;
    }
    let m0 = sup_ball_mass(&lp_power(base, p, n0, budget)?, r);
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    for &n in n_list {
        let mass = sup_ball_mass(&lp_power(base, p, n, budget)?, r);
        out.push(Outcome::new("ball-bound", mass, m0.powi((n / n0) as i32), Relation::Le));
        if let Some(q) = prev {
            out.push(Outcome::new("ball-monotone", mass, q, Relation::Le));
        }
        prev = Some(mass);
    }
    Ok(out)
}

/// Distance levels from `i` in increasing order, and the open-ball mass below each.
fn ball_profile(x: &FiniteMmSpace, i: usize) -> Vec<(f64, f64)> {
    let mut lv: Vec<f64> = (0..x.len()).map(|j| x.dist(i, j)).filter(|&d| d > 0.0).collect();
    lv.sort_by(f64::total_cmp);
    lv.dedup();
    lv.iter()
        .map(|&r| (r, (0..x.len()).filter(|&j| x.dist(i, j) < r).map(|j| x.weight(j)).sum()))
        .collect()
}

struct WedgeStats {
    mass_a: f64,
    mass_b: f64,
    separation: f64,
    radius: f64,
}

fn wedge_stats(xn: &FiniteMmSpace, alpha: f64, target: f64) -> Result<WedgeStats> {
    let base = PointedSpace::new(xn.clone(), 0)?;
    let w = wedge_sum(&base, &base, alpha)?;
    let radius = ball_profile(xn, 0)
        .into_iter()
        .filter(|&(_, m)| m <= target)
        .map(|(r, _)| r)
        .fold(0.0, f64::max);
    let n = xn.len();
    let far_x: Vec<usize> = (0..n).filter(|&i| xn.dist(i, 0) >= radius).collect();
    // Y points sit after X in the wedge, without the glued base
    let far_y: Vec<usize> = (1..n).filter(|&j| xn.dist(j, 0) >= radius).map(|j| n + j - 1).collect();
    let ws = &w.space;
    let mass_a = far_x.iter().map(|&i| ws.weight(i)).sum();
    let mass_b = far_y.iter().map(|&i| ws.weight(i)).sum();
    let separation = far_x
        .iter()
        .flat_map(|&i| far_y.iter().map(move |&j| (i, j)))
        .map(|(i, j)| ws.dist(i, j))
        .fold(f64::INFINITY, f64::min);
    Ok(WedgeStats {
        mass_a,
        mass_b,
        separation,
        radius,
    })
}

fn wedge(m: usize, n_list: &[usize], alpha: f64, seed: u64, budget: &Budget) -> Result<Vec<Outcome>> {
    if n_list.is_empty() {
        return invalid_param("n_list must be nonempty");
    }
    let c = cycle_space(m, 2.0 * std::f64::consts::PI)?;
    let first = lp_power(&c, 2.0, n_list[0], budget)?;
    let target = ball_profile(&first, 0)[0].1;
    let mut out = Vec::new();
    let (mut ns, mut seps, mut gaps_a, mut gaps_b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &n in n_list {
        let xn = lp_power(&c, 2.0, n, budget)?;
        let s = wedge_stats(&xn, alpha, target)?;
        let swapped = wedge_stats(&xn, 1.0 - alpha, target)?;
        out.push(Outcome::new("separation", s.separation, 2.0 * s.radius, Relation::Eq));
        out.push(Outcome::new("swap-mass", s.mass_a, swapped.mass_b, Relation::Eq));
        out.push(Outcome::new("swap-separation", s.separation, swapped.separation, Relation::Eq));
        if alpha == 0.5 {
            out.push(Outcome::new("balanced-masses", s.mass_a, s.mass_b, Relation::Eq));
        }
        let pw = PointedSpace::new(xn.clone(), 0)?;
        let w = wedge_sum(&pw, &pw, alpha)?;
        let sum = PyramidApprox::gapped(
            vec![pw.clone(), pw],
            WeightVector::a1(vec![alpha, 1.0 - alpha])?,
            2.0 * s.radius,
        )?;
        let opts = SampleOptions {
            seed,
            ..SampleOptions::default()
        };
        let rho = rho_empirical(&PyramidApprox::of_space(w.space), &sum, 1, &opts)?;
        out.push(Outcome::new("rho-empirical-to-sum", rho.value, n as f64, Relation::Report));
        ns.push(n as f64);
        seps.push(s.separation);
        gaps_a.push((s.mass_a - alpha).abs());
        gaps_b.push((s.mass_b - (1.0 - alpha)).abs());
    }
    if ns.len() > 1 {
        out.push(Outcome::new("separation-trend", spearman(&ns, &seps), 1.0, Relation::Eq));
        out.push(Outcome::new("mass-a-trend", spearman(&ns, &gaps_a), -1.0, Relation::Eq));
        out.push(Outcome::new("mass-b-trend", spearman(&ns, &gaps_b), -1.0, Relation::Eq));
    }
    Ok(out)
}

fn round_trip(parts: &[FiniteMmSpace], a: &WeightVector, perm: &[usize], budget: &Budget) -> Result<Vec<Outcome>> {
    let z = direct_sum(parts, a)?;
    let d = decompose_extended(&z)?;
    let mut out = vec![Outcome::new("part-count", d.parts.len() as f64, parts.len() as f64, Relation::Eq)];
    let mut want: Vec<f64> = a.entries().to_vec();
    want.sort_by(|x, y| y.total_cmp(x));
    let werr = want
        .iter()
        .zip(d.weights.entries())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    out.push(Outcome::new("weight-multiset", werr, 0.0, Relation::Close(1e-12)));
    let mut used = vec![false; parts.len()];
    let mut matched = 0;
    for (k, q) in d.parts.iter().enumerate() {
        for (n, x) in parts.iter().enumerate() {
            if !used[n] && (a.get(n) - d.weights.get(k)).abs() <= 1e-9 && mm_isomorphic(q, x, budget)?.is_some() {
                used[n] = true;
                matched += 1;
                break;
            }
        }
    }
    out.push(Outcome::new("parts-matched", matched as f64, parts.len() as f64, Relation::Eq));
    let labels = (0..z.len()).map(|i| format!("q{i}")).collect();
    let d2 = decompose_extended(&z.permuted(perm, labels)?)?;
    let same = d.canonical
        && d2.canonical
        && d.weights == d2.weights
        && d.parts.len() == d2.parts.len()
        && d.parts
            .iter()
            .zip(&d2.parts)
            .all(|(p, q)| p.dist_flat() == q.dist_flat() && p.weights() == q.weights());
    out.push(Outcome::new("canonical-rebuild", flag(same), 1.0, Relation::Eq));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_signs() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[2.0, 5.0, 9.0]), 1.0);
        assert_eq!(spearman(&[1.0, 2.0], &[3.0, 1.0]), -1.0);
        assert_eq!(spearman(&[1.0, 2.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn relations() {
        assert!(Outcome::new("x", 1.0, 1.0 - 5e-10, Relation::Le).holds());
        assert!(!Outcome::new("x", 1.0, 0.99, Relation::Le).holds());
        assert!(!Outcome::new("x", 1.0, 1.0, Relation::Lt).holds());
        assert!(!Outcome::new("x", 0.1 + 0.2, 0.3, Relation::Eq).holds());
        assert!(Outcome::new("x", 0.1 + 0.2, 0.3, Relation::Close(1e-12)).holds());
        assert!(Outcome::new("x", 5.0, 0.0, Relation::Report).holds());
    }

    #[test]
    fn wedge_numbers_on_the_hexagon() {
        let out = wedge(6, &[1, 2], 0.5, 1, &Budget::default()).unwrap();
        assert!(out.iter().all(|o| o.holds()), "{out:?}");
        let third = std::f64::consts::PI / 3.0;
        let sep: Vec<f64> = out.iter().filter(|o| o.check == "separation").map(|o| o.lhs).collect();
        assert_eq!(sep, vec![2.0 * third, 2.0 * (third.hypot(third))]);
    }

    #[test]
    fn ball_decay_two_point() {
        let base = FiniteMmSpace::two_point(1.0, 0.5).unwrap();
        let out = ball_decay(&base, 2.0, 0.4, &[1, 2, 4], &Budget::default()).unwrap();
        let masses: Vec<f64> = out.iter().filter(|o| o.check == "ball-bound").map(|o| o.lhs).collect();
        assert_eq!(masses, vec![0.5, 0.25, 0.0625]);
        assert!(out.iter().all(|o| o.holds()));
        assert!(ball_decay(&base, 2.0, 0.6, &[1], &Budget::default()).is_err());
    }
}
