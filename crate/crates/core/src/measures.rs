//! Probability measures on finite metric spaces and the distances between them.
//!
//! The Prokhorov distance is computed two independent ways: a scan over all
//! subsets of the support of `ν`, and a max-flow feasibility test over the
//! finitely many candidate radii.

use crate::budget::{Budget, TOL};
use crate::error::{invalid_param, limit, Result};
use crate::graph::{bipartite_flow, quantize, MASS_SCALE};
use crate::space::{Metric, WeightedMetric};

/// A probability measure on the points of a metric space. Zero masses are allowed.
#[derive(Clone, Debug)]
pub struct MeasureOnSpace<'a, M: Metric + ?Sized> {
    space: &'a M,
    mass: Vec<f64>,
}

impl<'a, M: Metric + ?Sized> MeasureOnSpace<'a, M> {
    pub fn new(space: &'a M, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != space.len() {
            return invalid_param(format!("{} masses for {} points", mass.len(), space.len()));
        }
        let mut sum = 0.0;
        for &m in &mass {
            if !m.is_finite() || m < 0.0 {
                return invalid_param(format!("bad mass {m}"));
            }
            sum += m;
        }
        if (sum - 1.0).abs() > TOL * (mass.len().max(1) as f64) {
            return invalid_param(format!("masses sum to {sum}, expected 1"));
        }
        Ok(MeasureOnSpace { space, mass })
    }

    pub fn dirac(space: &'a M, i: usize) -> Result<Self> {
        if i >= space.len() {
            return invalid_param("dirac point out of range");
        }
        let mut mass = vec![0.0; space.len()];
        mass[i] = 1.0;
        Ok(MeasureOnSpace { space, mass })
    }

    pub fn space(&self) -> &'a M {
        self.space
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn support(&self) -> Vec<usize> {
        support(&self.mass)
    }
}

impl<'a, M: WeightedMetric + ?Sized> MeasureOnSpace<'a, M> {
    /// The measure carried by an mm-space.
    pub fn of(space: &'a M) -> Self {
        MeasureOnSpace {
            space,
            mass: space.weights().to_vec(),
        }
    }
}

fn support(mass: &[f64]) -> Vec<usize> {
    (0..mass.len()).filter(|&i| mass[i] > 0.0).collect()
}

fn same_space<M: Metric + ?Sized>(a: &MeasureOnSpace<M>, b: &MeasureOnSpace<M>) -> Result<()> {
    if std::ptr::addr_eq(a.space as *const M, b.space as *const M) {
        Ok(())
    } else {
        invalid_param("measures live on different spaces")
    }
}

/// `Σ a_n μ_n` for nonnegative coefficients summing to one.
pub fn convex_combination<'a, M: Metric + ?Sized>(
    coeffs: &[f64],
    measures: &[MeasureOnSpace<'a, M>],
) -> Result<MeasureOnSpace<'a, M>> {
    if coeffs.len() != measures.len() || measures.is_empty() {
        return invalid_param("need one coefficient per measure");
    }
    let sum: f64 = coeffs.iter().sum();
    if coeffs.iter().any(|&c| !(c >= 0.0)) || (sum - 1.0).abs() > TOL {
        return invalid_param("coefficients must be nonnegative and sum to 1");
    }
    for m in &measures[1..] {
        same_space(&measures[0], m)?;
    }
    let n = measures[0].mass.len();
    let mut mass = vec![0.0; n];
    for (c, m) in coeffs.iter().zip(measures) {
        for i in 0..n {
            mass[i] += c * m.mass[i];
        }
    }
    Ok(MeasureOnSpace {
        space: measures[0].space,
        mass,
    })
}

/// `½ Σ |μ - ν|`.
pub fn total_variation<M: Metric + ?Sized>(mu: &MeasureOnSpace<M>, nu: &MeasureOnSpace<M>) -> Result<f64> {
    same_space(mu, nu)?;
    Ok(0.5 * mu.mass.iter().zip(&nu.mass).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// `f_* μ` for a map given as target indices.
pub fn pushforward<'b, M: Metric + ?Sized, N: Metric + ?Sized>(
    mu: &MeasureOnSpace<M>,
    f: &[usize],
    target: &'b N,
) -> Result<MeasureOnSpace<'b, N>> {
    if f.len() != mu.mass.len() {
        return invalid_param("map length differs from the domain size");
    }
    let mut mass = vec![0.0; target.len()];
    for (i, &j) in f.iter().enumerate() {
        if j >= target.len() {
            return invalid_param("map leaves the target space");
        }
        mass[j] += mu.mass[i];
    }
    Ok(MeasureOnSpace { space: target, mass })
}

/// Prokhorov distance by scanning all subsets of the support of `ν`.
pub fn prokhorov_subset_oracle<M: Metric + ?Sized>(
    mu: &MeasureOnSpace<M>,
    nu: &MeasureOnSpace<M>,
    budget: &Budget,
) -> Result<f64> {
    same_space(mu, nu)?;
    prokhorov_oracle_raw(mu.space, &mu.mass, &nu.mass, budget.subset_scan_points)
}

/// Prokhorov distance by max-flow feasibility over candidate radii.
pub fn prokhorov_flow<M: Metric + ?Sized>(mu: &MeasureOnSpace<M>, nu: &MeasureOnSpace<M>) -> Result<f64> {
    same_space(mu, nu)?;
    Ok(prokhorov_flow_raw(mu.space, &mu.mass, &nu.mass))
}

/// For one set `A`, the least `ε` with `μ(B_ε(A)) ≥ ν(A) - ε`, where
/// `levels` holds `(d(x, A), μ(x))` sorted by distance.
fn least_radius(levels: &[(f64, f64)], nu_a: f64) -> f64 {
    let mut mass = 0.0;
    let mut lo = 0.0;
    let mut k = 0;
    loop {
        let hi = if k < levels.len() { levels[k].0 } else { f64::INFINITY };
        if hi > lo || k == levels.len() {
            let e = lo.max(nu_a - mass);
            if e < hi {
                return e.max(0.0);
            }
        }
        if k == levels.len() || hi.is_infinite() {
            // only infinitely distant mass is left
            return lo.max(nu_a - mass).max(0.0);
        }
        let d = levels[k].0;
        while k < levels.len() && levels[k].0 == d {
            mass += levels[k].1;
            k += 1;
        }
        lo = d;
    }
}

pub(crate) fn prokhorov_oracle_raw<M: Metric + ?Sized>(space: &M, mu: &[f64], nu: &[f64], max_points: usize) -> Result<f64> {
    let sx = support(mu);
    let sy = support(nu);
    let n = sy.len();
    if n > max_points {
        return limit(format!("subset scan over {n} points exceeds budget {max_points}"));
    }
    let m = sx.len();
    let full = 1usize << n;
    let mut dmin = vec![f64::INFINITY; full * m];
    let mut nu_a = vec![0.0; full];
    let mut best = 0.0f64;
    let mut levels: Vec<(f64, f64)> = Vec::with_capacity(m);
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        let prev = mask & (mask - 1);
        nu_a[mask] = nu_a[prev] + nu[sy[low]];
        for (a, &x) in sx.iter().enumerate() {
            dmin[mask * m + a] = dmin[prev * m + a].min(space.dist(x, sy[low]));
        }
        levels.clear();
        levels.extend(sx.iter().enumerate().map(|(a, &x)| (dmin[mask * m + a], mu[x])));
        levels.sort_by(|p, q| p.0.total_cmp(&q.0));
        best = best.max(least_radius(&levels, nu_a[mask]));
    }
    Ok(best.min(1.0))
}

pub(crate) fn prokhorov_flow_raw<M: Metric + ?Sized>(space: &M, mu: &[f64], nu: &[f64]) -> f64 {
    let sx = support(mu);
    let sy = support(nu);
    let qmu = quantize(&sx.iter().map(|&i| mu[i]).collect::<Vec<_>>());
    let qnu = quantize(&sy.iter().map(|&j| nu[j]).collect::<Vec<_>>());
    let total: i64 = qnu.iter().sum();
    let mut levels = vec![0.0];
    for &x in &sx {
        for &y in &sy {
            let d = space.dist(x, y);
            if d.is_finite() {
                levels.push(d);
            }
        }
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let deficit = |r: f64| -> f64 {
        let f = bipartite_flow(&qmu, &qnu, |i, j| space.dist(sx[i], sy[j]) <= r);
        (total - f).max(0) as f64 / MASS_SCALE
    };
    // D_k increases and the deficit decreases; the answer is min_k max(D_k, deficit_k).
    let (mut lo, mut hi) = (0usize, levels.len());
    let mut cache: Vec<Option<f64>> = vec![None; levels.len()];
    let def = |k: usize, cache: &mut Vec<Option<f64>>| -> f64 {
        if let Some(v) = cache[k] {
            return v;
        }
        let v = deficit(levels[k]);
        cache[k] = Some(v);
        v
    };
    while lo < hi {
        let mid = (lo + hi) / 2;
        if levels[mid] >= def(mid, &mut cache) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let ans = if lo < levels.len() {
        let mut a = levels[lo];
        if lo > 0 {
            a = a.min(def(lo - 1, &mut cache));
        }
        a
    } else {
        def(levels.len() - 1, &mut cache)
    };
    ans.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{DistMatrix, FiniteMmSpace};
    use proptest::prelude::*;

    fn line(points: &[f64]) -> DistMatrix {
        let p = points.to_vec();
        DistMatrix::from_fn(p.len(), move |i, j| (p[i] - p[j]).abs())
    }

    #[test]
    fn diracs_on_two_points() {
        let x = FiniteMmSpace::two_point(1.0, 0.5).unwrap();
        let a = MeasureOnSpace::dirac(&x, 0).unwrap();
        let b = MeasureOnSpace::dirac(&x, 1).unwrap();
        let budget = Budget::default();
        assert_eq!(prokhorov_flow(&a, &b).unwrap(), 1.0);
        assert_eq!(prokhorov_subset_oracle(&a, &b, &budget).unwrap(), 1.0);
        assert_eq!(total_variation(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn diracs_closer_than_one() {
        // d_P(δ_x, δ_y) = min(d, 1)
        let x = FiniteMmSpace::two_point(0.3, 0.5).unwrap();
        let a = MeasureOnSpace::dirac(&x, 0).unwrap();
        let b = MeasureOnSpace::dirac(&x, 1).unwrap();
        assert_eq!(prokhorov_flow(&a, &b).unwrap(), 0.3);
        assert_eq!(prokhorov_subset_oracle(&a, &b, &Budget::default()).unwrap(), 0.3);
    }

    #[test]
    fn half_mass_shift() {
        // μ = δ_0, ν = ½δ_0 + ½δ_5: the best radius is ½
        let x = line(&[0.0, 5.0]);
        let a = MeasureOnSpace::new(&x, vec![1.0, 0.0]).unwrap();
        let b = MeasureOnSpace::new(&x, vec![0.5, 0.5]).unwrap();
        assert_eq!(prokhorov_flow(&a, &b).unwrap(), 0.5);
        assert_eq!(prokhorov_subset_oracle(&a, &b, &Budget::default()).unwrap(), 0.5);
        assert_eq!(prokhorov_flow(&b, &a).unwrap(), 0.5);
    }

    #[test]
    fn mismatched_spaces_rejected() {
        let x = line(&[0.0, 1.0]);
        let y = line(&[0.0, 1.0]);
        let a = MeasureOnSpace::dirac(&x, 0).unwrap();
        let b = MeasureOnSpace::dirac(&y, 0).unwrap();
        assert!(prokhorov_flow(&a, &b).is_err());
        assert!(total_variation(&a, &b).is_err());
    }

    #[test]
    fn oracle_respects_budget() {
        let x = line(&(0..16).map(|i| i as f64).collect::<Vec<_>>());
        let m = MeasureOnSpace::new(&x, vec![1.0 / 16.0; 16]).unwrap();
        assert!(matches!(
            prokhorov_subset_oracle(&m, &m, &Budget::default()),
            Err(crate::MmError::ResourceLimit(_))
        ));
    }

    #[test]
    fn pushforward_merges_mass() {
        let x = line(&[0.0, 1.0, 2.0]);
        let y = line(&[0.0, 1.0]);
        let m = MeasureOnSpace::new(&x, vec![0.25, 0.25, 0.5]).unwrap();
        let p = pushforward(&m, &[0, 0, 1], &y).unwrap();
        assert_eq!(p.mass(), &[0.5, 0.5]);
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (2usize..7).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..3.0, n),
                prop::collection::vec(0.0f64..1.0, n),
                prop::collection::vec(0.0f64..1.0, n),
            )
        })
    }

    fn normalize(v: &[f64]) -> Vec<f64> {
        let s: f64 = v.iter().sum::<f64>() + 1e-3;
        let mut out: Vec<f64> = v.iter().map(|x| x / s).collect();
        out[0] += 1.0 - out.iter().sum::<f64>();
        out
    }

    proptest! {
        #[test]
        fn flow_matches_oracle((pts, a, b) in instance()) {
            let x = line(&pts);
            let mu = MeasureOnSpace::new(&x, normalize(&a)).unwrap();
            let nu = MeasureOnSpace::new(&x, normalize(&b)).unwrap();
            let f = prokhorov_flow(&mu, &nu).unwrap();
            let o = prokhorov_subset_oracle(&mu, &nu, &Budget::default()).unwrap();
            prop_assert!((f - o).abs() <= 1e-9, "flow {} oracle {}", f, o);
        }

        #[test]
        fn prokhorov_is_a_metric_below_tv((pts, a, b) in instance(), c in prop::collection::vec(0.0f64..1.0, 7)) {
            let x = line(&pts);
            let n = pts.len();
            let mu = MeasureOnSpace::new(&x, normalize(&a)).unwrap();
            let nu = MeasureOnSpace::new(&x, normalize(&b)).unwrap();
            let la = MeasureOnSpace::new(&x, normalize(&c[..n])).unwrap();
            let dmn = prokhorov_flow(&mu, &nu).unwrap();
            prop_assert!((dmn - prokhorov_flow(&nu, &mu).unwrap()).abs() <= 1e-9);
            prop_assert!(prokhorov_flow(&mu, &mu).unwrap() <= 1e-12);
            prop_assert!(dmn <= total_variation(&mu, &nu).unwrap() + 1e-9);
            let tri = prokhorov_flow(&mu, &la).unwrap() + prokhorov_flow(&la, &nu).unwrap();
            prop_assert!(dmn <= tri + 1e-9);
        }

        #[test]
        fn mixing_contracts((pts, a, b) in instance(), c in prop::collection::vec(0.0f64..1.0, 7), t in 0.0f64..1.0) {
            let x = line(&pts);
            let n = pts.len();
            let mu = MeasureOnSpace::new(&x, normalize(&a)).unwrap();
            let nu = MeasureOnSpace::new(&x, normalize(&b)).unwrap();
            let la = MeasureOnSpace::new(&x, normalize(&c[..n])).unwrap();
            let m1 = convex_combination(&[t, 1.0 - t], &[mu.clone(), la.clone()]).unwrap();
            let m2 = convex_combination(&[t, 1.0 - t], &[nu.clone(), la]).unwrap();
            let lhs = prokhorov_flow(&m1, &m2).unwrap();
            prop_assert!(lhs <= prokhorov_flow(&mu, &nu).unwrap() + 1e-9);
        }
    }
}
