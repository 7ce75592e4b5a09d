//! Distortion, coupling mass and the box distance between finite mm-spaces.

use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{invalid_param, limit, MmError, Result};
use crate::flag::Certified;
use crate::graph::{bipartite_flow, maximal_cliques, quantize, MASS_SCALE};
use crate::maps::{evaluate_map, search_eps_map, EpsMap, Relax};
use crate::measures::{prokhorov_flow, MeasureOnSpace};
use crate::space::{FiniteMmSpace, Metric, WeightedMetric};

/// `dis(S) = sup |d_X(x,x') - d_Y(y,y')|` over pairs in `S`; zero for empty `S`.
pub fn distortion<X: Metric + ?Sized, Y: Metric + ?Sized>(pairs: &[(usize, usize)], x: &X, y: &Y) -> f64 {
    let mut d = 0.0f64;
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for &(k, l) in &pairs[a + 1..] {
            let (dx, dy) = (x.dist(i, k), y.dist(j, l));
            let v = if dx == dy { 0.0 } else { (dx - dy).abs() };
            d = d.max(v);
        }
    }
    d
}

/// `max π(S)` over couplings `π` of `μ` and `ν`.
pub fn max_coupling_mass(pairs: &[(usize, usize)], mu: &[f64], nu: &[f64]) -> Result<f64> {
    if pairs.iter().any(|&(i, j)| i >= mu.len() || j >= nu.len()) {
        return invalid_param("pair index out of range");
    }
    let (qm, qn) = (quantize(mu), quantize(nu));
    let f = bipartite_flow(&qm, &qn, |i, j| pairs.contains(&(i, j)));
    Ok(f as f64 / MASS_SCALE)
}

/// The exact box distance with an optimal subset `S ⊆ X × Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDistance {
    pub value: f64,
    pub correspondence: Vec<(usize, usize)>,
}

/// `□(X, Y) = min_S max(dis(S), 1 - max π(S))`.
///
/// Only distortion values occur as optimal `dis(S)`, and for a fixed bound on
/// the distortion the coupling mass is maximized on a maximal clique of the
/// compatibility graph, so the minimum ranges over finitely many cliques.
pub fn box_distance_exact(x: &FiniteMmSpace, y: &FiniteMmSpace, budget: &Budget) -> Result<BoxDistance> {
    let (n, m) = (x.len(), y.len());
    let k = n * m;
    if k > budget.box_pairs || k > 64 {
        return limit(format!("box distance on {n}×{m} pairs exceeds budget {}", budget.box_pairs));
    }
    let pair = |v: usize| (v / m, v % m);
    let diff = |u: usize, v: usize| {
        let ((i, j), (a, b)) = (pair(u), pair(v));
        (x.dist(i, a) - y.dist(j, b)).abs()
    };
    let mut levels = vec![0.0];
    for u in 0..k {
        for v in (u + 1)..k {
            levels.push(diff(u, v));
        }
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let (qm, qn) = (quantize(x.weights()), quantize(y.weights()));
    let total: i64 = qn.iter().sum();
    let mut best = 1.0f64;
    let mut best_mask = 0u64;
    for &delta in &levels {
        if delta >= best {
            break;
        }
        let adj: Vec<u64> = (0..k)
            .map(|u| (0..k).filter(|&v| v != u && diff(u, v) <= delta).fold(0u64, |acc, v| acc | (1 << v)))
            .collect();
        let mut level_def = i64::MAX;
        let mut level_mask = 0u64;
        maximal_cliques(&adj, &mut |clique| {
            let (mut rows, mut cols) = (0u64, 0u64);
            let mut c = clique;
            while c != 0 {
                let (i, j) = pair(c.trailing_zeros() as usize);
                rows |= 1 << i;
                cols |= 1 << j;
                c &= c - 1;
            }
            let row_mass: i64 = (0..n).filter(|&i| rows & (1 << i) != 0).map(|i| qm[i]).sum();
            let col_mass: i64 = (0..m).filter(|&j| cols & (1 << j) != 0).map(|j| qn[j]).sum();
            if total - row_mass.min(col_mass) >= level_def {
                return true;
            }
            let f = bipartite_flow(&qm, &qn, |i, j| clique & (1 << (i * m + j)) != 0);
            if total - f < level_def {
                level_def = total - f;
                level_mask = clique;
            }
            level_def > 0
        });
        let def = level_def.max(0) as f64 / MASS_SCALE;
        let val = delta.max(def);
        if val < best {
            best = val;
            best_mask = level_mask;
        }
        if level_def <= 0 {
            break;
        }
    }
    let correspondence = (0..k).filter(|&v| best_mask & (1 << v) != 0).map(pair).collect();
    Ok(BoxDistance {
        value: best,
        correspondence,
    })
}

/// `□ ≤ 2 d_P` for two measures on one metric space.
pub fn box_upper_from_prokhorov<M: Metric + ?Sized>(mu: &MeasureOnSpace<M>, nu: &MeasureOnSpace<M>) -> Result<Certified<f64>> {
    Ok(Certified::with_flag(
        (2.0 * prokhorov_flow(mu, nu)?).min(1.0),
        crate::flag::Flag::Upper,
    ))
}

/// Checks whether `f` is an `ε`-mm-isomorphism: distortion at most `ε` on a
/// domain of mass at least `1 - ε`, and `d_P(f_* μ_X, μ_Y) ≤ ε`.
/// A certificate bounds the box distance by `3ε`.
pub fn certify_mm_iso(f: &[usize], x: &FiniteMmSpace, y: &FiniteMmSpace, eps: f64, budget: &Budget) -> Result<EpsMap> {
    let e = evaluate_map(x, y, f, eps, Relax::Isometry, budget)?;
    if e.satisfies(eps) {
        Ok(e)
    } else {
        Err(MmError::Refusal(format!(
            "not an {eps}-mm-isomorphism: domain mass {} and Prokhorov distance {}",
            e.domain_mass, e.prokhorov
        )))
    }
}

/// Searches all maps for an `ε`-mm-isomorphism.
pub fn find_mm_iso(x: &FiniteMmSpace, y: &FiniteMmSpace, eps: f64, budget: &Budget) -> Result<Option<EpsMap>> {
    search_eps_map(x, y, eps, Relax::Isometry, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{restrict_normalize, scale};
    use crate::testutil::arb_space;
    use proptest::prelude::*;

    /// Max flow by the cut formula `min_A μ(X∖A) + ν(N_S(A))`.
    fn coupling_by_cuts(s: &[(usize, usize)], mu: &[f64], nu: &[f64]) -> f64 {
        let n = mu.len();
        let mut best = f64::INFINITY;
        for a in 0..(1usize << n) {
            let out: f64 = (0..n).filter(|&i| a & (1 << i) == 0).map(|i| mu[i]).sum();
            let mut nb = vec![false; nu.len()];
            for &(i, j) in s {
                if a & (1 << i) != 0 {
                    nb[j] = true;
                }
            }
            let inn: f64 = (0..nu.len()).filter(|&j| nb[j]).map(|j| nu[j]).sum();
            best = best.min(out + inn);
        }
        best
    }

    fn box_by_enumeration(x: &FiniteMmSpace, y: &FiniteMmSpace) -> f64 {
        let m = y.len();
        let k = x.len() * m;
        let mut best = 1.0f64;
        for mask in 1u32..(1 << k) {
            let s: Vec<(usize, usize)> = (0..k).filter(|&v| mask & (1 << v) != 0).map(|v| (v / m, v % m)).collect();
            let c = coupling_by_cuts(&s, x.weights(), y.weights());
            best = best.min(distortion(&s, x, y).max(1.0 - c));
        }
        best
    }

    #[test]
    fn point_versus_two_point() {
        let b = Budget::default();
        let p = FiniteMmSpace::one_point();
        for l in [0.1, 0.5, 0.9, 2.0] {
            let y = FiniteMmSpace::two_point(l, 0.5).unwrap();
            let v = box_distance_exact(&p, &y, &b).unwrap().value;
            assert_eq!(v, l.min(0.5), "l = {l}");
        }
    }

    #[test]
    fn scaled_two_point() {
        let b = Budget::default();
        let x = FiniteMmSpace::two_point(1.0, 0.5).unwrap();
        let y = scale(&x, 2.0).unwrap();
        // distortion 1 on the diagonal, or mass ½ on one pair
        assert_eq!(box_distance_exact(&x, &y, &b).unwrap().value, 0.5);
    }

    #[test]
    fn distortion_of_empty_set_is_zero() {
        let x = FiniteMmSpace::two_point(1.0, 0.5).unwrap();
        assert_eq!(distortion(&[], &x, &x), 0.0);
    }

    #[test]
    fn certificate_on_identity() {
        let b = Budget::default();
        let x = FiniteMmSpace::two_point(1.0, 0.5).unwrap();
        let c = certify_mm_iso(&[0, 1], &x, &x, 0.0, &b).unwrap();
        assert_eq!(c.domain_mass, 1.0);
        assert!(matches!(certify_mm_iso(&[0, 0], &x, &x, 0.1, &b), Err(MmError::Refusal(_))));
    }

    #[test]
    fn over_budget_refused() {
        let x = crate::construct::dissipation_space(5).unwrap();
        assert!(matches!(box_distance_exact(&x, &x, &Budget::default()), Err(MmError::ResourceLimit(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn exact_box_matches_enumeration(x in arb_space(1, 3), y in arb_space(1, 3)) {
            let b = Budget::default();
            let v = box_distance_exact(&x, &y, &b).unwrap();
            let o = box_by_enumeration(&x, &y);
            prop_assert!((v.value - o).abs() <= 1e-9, "box {} enumeration {}", v.value, o);
            let s = &v.correspondence;
            let witnessed = distortion(s, &x, &y).max(1.0 - max_coupling_mass(s, x.weights(), y.weights()).unwrap());
            prop_assert!((witnessed - v.value).abs() <= 1e-9);
        }

        #[test]
        fn box_is_a_metric(x in arb_space(1, 4), y in arb_space(1, 4), z in arb_space(1, 4)) {
            let b = Budget::default();
            let bx = |p: &FiniteMmSpace, q: &FiniteMmSpace| box_distance_exact(p, q, &b).unwrap().value;
            prop_assert_eq!(bx(&x, &x), 0.0);
            let xy = bx(&x, &y);
            prop_assert!((0.0..=1.0).contains(&xy));
            prop_assert!((xy - bx(&y, &x)).abs() <= 1e-12);
            prop_assert!(xy <= bx(&x, &z) + bx(&z, &y) + 1e-9);
        }

        #[test]
        fn box_below_twice_prokhorov(x in arb_space(2, 4), w in prop::collection::vec(0.0f64..1.0, 4)) {
            let b = Budget::default();
            let n = x.len();
            let s: f64 = w[..n].iter().sum::<f64>() + 0.1;
            let mut nu: Vec<f64> = w[..n].iter().map(|v| v / s).collect();
            nu[0] += 1.0 - nu.iter().sum::<f64>();
            let mu_m = MeasureOnSpace::of(&x);
            let nu_m = MeasureOnSpace::new(&x, nu.clone()).unwrap();
            let y = FiniteMmSpace::from_matrix(x.dist_rows(), nu).unwrap();
            let bx = box_distance_exact(&x, &y, &b).unwrap().value;
            let up = box_upper_from_prokhorov(&mu_m, &nu_m).unwrap().value;
            prop_assert!(bx <= up + 1e-9, "box {} > 2 d_P {}", bx, up);
        }

        #[test]
        fn certificates_bound_box(x in arb_space(1, 3), y in arb_space(1, 3), eps in 0.0f64..0.4) {
            let b = Budget::default();
            let bx = box_distance_exact(&x, &y, &b).unwrap().value;
            if let Some(c) = find_mm_iso(&x, &y, eps, &b).unwrap() {
                prop_assert!(c.satisfies(eps));
                prop_assert!(bx <= 3.0 * eps + 1e-9);
            }
            // a box value below ε forces a 3ε-certificate
            let e = bx + 1e-6;
            prop_assert!(find_mm_iso(&x, &y, 3.0 * e, &b).unwrap().is_some());
        }

        #[test]
        fn restriction_bound(x in arb_space(2, 4), keep in 1usize..15) {
            let b = Budget::default();
            let subset: Vec<usize> = (0..x.len()).filter(|&i| keep & (1 << i) != 0).collect();
            prop_assume!(!subset.is_empty());
            let a = restrict_normalize(&x, &subset).unwrap();
            let mass: f64 = subset.iter().map(|&i| x.weight(i)).sum();
            let bx = box_distance_exact(&a, &x, &b).unwrap().value;
            prop_assert!(bx <= 4.0 * (1.0 - mass) + 1e-9);
        }
    }
}
