//! Searches for maps between finite mm-spaces: isomorphisms, 1-Lipschitz
//! dominations and their ε-relaxed variants.

use serde::{Deserialize, Serialize};

use crate::budget::{tol_at, Budget, ISO_TOL, TOL};
use crate::error::{invalid_param, limit, Result};
use crate::graph::{greedy_independent_set, max_weight_independent_set};
use crate::measures::prokhorov_flow_raw;
use crate::space::{Metric, WeightedMetric};

fn close(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= ISO_TOL * a.abs().max(b.abs()).max(1.0)
}

fn sorted_row<M: Metric + ?Sized>(m: &M, i: usize) -> Vec<f64> {
    let mut r: Vec<f64> = (0..m.len()).map(|j| m.dist(i, j)).collect();
    r.sort_by(f64::total_cmp);
    r
}

struct Nodes {
    used: u64,
    cap: u64,
}

impl Nodes {
    fn tick(&mut self) -> Result<()> {
        self.used += 1;
        if self.used > self.cap {
            return limit(format!("search exceeded {} nodes", self.cap));
        }
        Ok(())
    }
}

/// Finds a bijection `f: X → Y` preserving distances and weights within `1e-9`.
/// Works for extended spaces as well.
pub fn mm_isomorphic<X, Y>(x: &X, y: &Y, budget: &Budget) -> Result<Option<Vec<usize>>>
where
    X: WeightedMetric + ?Sized,
    Y: WeightedMetric + ?Sized,
{
    let n = x.len();
    if n > budget.iso_points {
        return limit(format!("isomorphism search on {n} points exceeds budget {}", budget.iso_points));
    }
    if y.len() != n {
        return Ok(None);
    }
    let rows_x: Vec<Vec<f64>> = (0..n).map(|i| sorted_row(x, i)).collect();
    let rows_y: Vec<Vec<f64>> = (0..n).map(|j| sorted_row(y, j)).collect();
    let mut cand: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let c: Vec<usize> = (0..n)
            .filter(|&j| close(x.weight(i), y.weight(j)) && rows_x[i].iter().zip(&rows_y[j]).all(|(a, b)| close(*a, *b)))
            .collect();
        if c.is_empty() {
            return Ok(None);
        }
        cand.push(c);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cand[a].len().cmp(&cand[b].len()).then(x.weight(b).total_cmp(&x.weight(a))));
    let mut f = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    let mut nodes = Nodes { used: 0, cap: budget.search_nodes };
    if iso_rec(x, y, &order, 0, &cand, &mut f, &mut taken, &mut nodes)? {
        Ok(Some(f))
    } else {
        Ok(None)
    }
}

#[allow(clippy::too_many_arguments)]
fn iso_rec<X, Y>(
    x: &X,
    y: &Y,
    order: &[usize],
    depth: usize,
    cand: &[Vec<usize>],
    f: &mut [usize],
    taken: &mut [bool],
    nodes: &mut Nodes,
) -> Result<bool>
where
    X: WeightedMetric + ?Sized,
    Y: WeightedMetric + ?Sized,
{
    if depth == order.len() {
        return Ok(true);
    }
    nodes.tick()?;
    let i = order[depth];
    for &j in &cand[i] {
        if taken[j] {
            continue;
        }
        let ok = order[..depth].iter().all(|&k| close(x.dist(i, k), y.dist(j, f[k])));
        if !ok {
            continue;
        }
        f[i] = j;
        taken[j] = true;
        if iso_rec(x, y, order, depth + 1, cand, f, taken, nodes)? {
            return Ok(true);
        }
        taken[j] = false;
        f[i] = usize::MAX;
    }
    Ok(false)
}

/// Decides `Y ≺ X`: finds a 1-Lipschitz `f: X → Y` with `f_* μ_X = μ_Y`.
pub fn lipschitz_dominates<X, Y>(x: &X, y: &Y, budget: &Budget) -> Result<Option<Vec<usize>>>
where
    X: WeightedMetric + ?Sized,
    Y: WeightedMetric + ?Sized,
{
    let n = x.len();
    if n > budget.dominance_points {
        return limit(format!("domination search on {n} points exceeds budget {}", budget.dominance_points));
    }
    if y.len() > n {
        return Ok(None);
    }
    let m = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x.weight(b).total_cmp(&x.weight(a)).then(a.cmp(&b)));
    let domains: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..m).map(|j| x.weight(i) <= y.weight(j) + TOL).collect())
        .collect();
    let mut st = DomState {
        residual: y.weights().to_vec(),
        f: vec![usize::MAX; n],
        nodes: Nodes { used: 0, cap: budget.search_nodes },
    };
    if dom_rec(x, y, &order, 0, domains, &mut st)? {
        Ok(Some(st.f))
    } else {
        Ok(None)
    }
}

struct DomState {
    residual: Vec<f64>,
    f: Vec<usize>,
    nodes: Nodes,
}

fn dom_rec<X, Y>(x: &X, y: &Y, order: &[usize], depth: usize, domains: Vec<Vec<bool>>, st: &mut DomState) -> Result<bool>
where
    X: WeightedMetric + ?Sized,
    Y: WeightedMetric + ?Sized,
{
    let n = order.len();
    if depth == n {
        return Ok(st.residual.iter().all(|r| r.abs() <= TOL));
    }
    st.nodes.tick()?;
    let i = order[depth];
    let m = y.len();
    let mut tries: Vec<usize> = (0..m).filter(|&j| domains[i][j]).collect();
    tries.sort_by(|&a, &b| st.residual[b].total_cmp(&st.residual[a]).then(a.cmp(&b)));
    for j in tries {
        if x.weight(i) > st.residual[j] + TOL {
            continue;
        }
        st.residual[j] -= x.weight(i);
        st.f[i] = j;
        let mut next = domains.clone();
        let mut dead = false;
        for &k in &order[depth + 1..] {
            let dxk = x.dist(i, k);
            let mut any = false;
            for l in 0..m {
                if next[k][l] && (y.dist(j, l) > dxk + tol_at(dxk) || x.weight(k) > st.residual[l] + TOL) {
                    next[k][l] = false;
                }
                any |= next[k][l];
            }
            if !any {
                dead = true;
                break;
            }
        }
        if !dead {
            // every unfilled target must remain reachable
            let rest = &order[depth + 1..];
            dead = (0..m).any(|l| st.residual[l] > TOL && !rest.iter().any(|&k| next[k][l]));
        }
        if !dead && dom_rec(x, y, order, depth + 1, next, st)? {
            return Ok(true);
        }
        st.residual[j] += x.weight(i);
        st.f[i] = usize::MAX;
    }
    Ok(false)
}

/// How distances must relate on the non-exceptional domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relax {
    /// `d_Y(f x, f x') ≤ d_X(x, x') + ε`.
    Lipschitz,
    /// `|d_Y(f x, f x') - d_X(x, x')| ≤ ε`.
    Isometry,
}

/// A map together with its largest admissible domain and the Prokhorov
/// distance between the pushforward and the target measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsMap {
    pub map: Vec<usize>,
    pub domain: Vec<usize>,
    pub domain_mass: f64,
    pub prokhorov: f64,
    /// Whether the domain search was exact.
    pub exact: bool,
}

fn violates(dx: f64, dy: f64, eps: f64, relax: Relax) -> bool {
    let slack = eps + tol_at(dx.max(dy));
    match relax {
        Relax::Lipschitz => dy > dx + slack,
        Relax::Isometry => (dy - dx).abs() > slack,
    }
}

/// Evaluates a fixed map: the heaviest admissible domain and `d_P(f_* μ_X, μ_Y)`.
pub fn evaluate_map<X, Y>(x: &X, y: &Y, f: &[usize], eps: f64, relax: Relax, budget: &Budget) -> Result<EpsMap>
where
    X: WeightedMetric + ?Sized,
    Y: WeightedMetric + ?Sized,
{
    let n = x.len();
    if f.len() != n || f.iter().any(|&j| j >= y.len()) {
        return invalid_param("map does not fit the spaces");
    }
    if !(eps >= 0.0) {
        return invalid_param("eps must be nonnegative");
    }
    let conflict = |i: usize, k: usize| i != k && violates(x.dist(i, k), y.dist(f[i], f[k]), eps, relax);
    let (domain, exact) = if n <= budget.mwis_points.min(64) {
        let masks: Vec<u64> = (0..n)
            .map(|i| (0..n).filter(|&k| conflict(i, k)).fold(0u64, |m, k| m | (1 << k)))
            .collect();
        let (_, mask) = max_weight_independent_set(&masks, x.weights());
        ((0..n).filter(|&i| mask & (1 << i) != 0).collect::<Vec<_>>(), true)
    } else {
        (greedy_independent_set(&conflict, x.weights()), false)
    };
    let domain_mass = domain.iter().map(|&i| x.weight(i)).sum();
    let mut push = vec![0.0; y.len()];
    for (i, &j) in f.iter().enumerate() {
        push[j] += x.weight(i);
    }
    let prokhorov = prokhorov_flow_raw(y, &push, y.weights());
    Ok(EpsMap {
        map: f.to_vec(),
        domain,
        domain_mass,
        prokhorov,
        exact,
    })
}

impl EpsMap {
    pub fn satisfies(&self, eps: f64) -> bool {
        self.domain_mass >= 1.0 - eps - TOL && self.prokhorov <= eps + TOL
    }
}

/// Searches all maps `X → Y` for one satisfying the relaxed condition at `ε`.
pub fn search_eps_map<X, Y>(x: &X, y: &Y, eps: f64, relax: Relax, budget: &Budget) -> Result<Option<EpsMap>>
where
    X: WeightedMetric + ?Sized,
    Y: WeightedMetric + ?Sized,
{
    let n = x.len();
    if n > budget.dominance_points {
        return limit(format!("map search on {n} points exceeds budget {}", budget.dominance_points));
    }
    if !(eps >= 0.0) {
        return invalid_param("eps must be nonnegative");
    }
    let m = y.len();
    // μ_Y of closed ε-balls around each target point
    let ball: Vec<f64> = (0..m)
        .map(|j| (0..m).filter(|&l| y.dist(j, l) <= eps).map(|l| y.weight(l)).sum())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x.weight(b).total_cmp(&x.weight(a)).then(a.cmp(&b)));
    let mut st = EpsState {
        f: vec![usize::MAX; n],
        push: vec![0.0; m],
        nodes: Nodes { used: 0, cap: budget.search_nodes },
        ball,
        eps,
        relax,
    };
    eps_rec(x, y, &order, 0, &mut st, budget)
}

struct EpsState {
    f: Vec<usize>,
    push: Vec<f64>,
    nodes: Nodes,
    ball: Vec<f64>,
    eps: f64,
    relax: Relax,
}

fn eps_rec<X, Y>(x: &X, y: &Y, order: &[usize], depth: usize, st: &mut EpsState, budget: &Budget) -> Result<Option<EpsMap>>
where
    X: WeightedMetric + ?Sized,
    Y: WeightedMetric + ?Sized,
{
    let n = order.len();
    if depth == n {
        let e = evaluate_map(x, y, &st.f, st.eps, st.relax, budget)?;
        return Ok(e.satisfies(st.eps).then_some(e));
    }
    st.nodes.tick()?;
    let i = order[depth];
    let m = y.len();
    let remaining: f64 = order[depth + 1..].iter().map(|&k| x.weight(k)).sum();
    let mut tries: Vec<usize> = (0..m).collect();
    tries.sort_by(|&a, &b| {
        (y.weight(b) - st.push[b])
            .total_cmp(&(y.weight(a) - st.push[a]))
            .then(a.cmp(&b))
    });
    for j in tries {
        st.f[i] = j;
        st.push[j] += x.weight(i);
        if eps_feasible(x, y, order, depth, remaining, st) {
            if let Some(found) = eps_rec(x, y, order, depth + 1, st, budget)? {
                return Ok(Some(found));
            }
        }
        st.push[j] -= x.weight(i);
        st.f[i] = usize::MAX;
    }
    Ok(None)
}

/// Necessary conditions on a partial map.
fn eps_feasible<X, Y>(x: &X, y: &Y, order: &[usize], depth: usize, remaining: f64, st: &EpsState) -> bool
where
    X: WeightedMetric + ?Sized,
    Y: WeightedMetric + ?Sized,
{
    let eps = st.eps;
    let m = y.len();
    for j in 0..m {
        // ν({y}) - ε ≤ μ_Y(B_ε(y)) and μ_Y({y}) - ε ≤ ν(B_ε(y))
        if st.push[j] > st.ball[j] + eps + TOL {
            return false;
        }
        let near: f64 = (0..m).filter(|&l| y.dist(j, l) <= eps).map(|l| st.push[l]).sum();
        if y.weight(j) > near + remaining + eps + TOL {
            return false;
        }
    }
    // a greedy matching of conflicting pairs bounds the excluded mass from below
    let assigned = &order[..=depth];
    let mut matched = vec![false; assigned.len()];
    let mut lost = 0.0;
    for a in 0..assigned.len() {
        if matched[a] {
            continue;
        }
        for b in (a + 1)..assigned.len() {
            if matched[b] {
                continue;
            }
            let (p, q) = (assigned[a], assigned[b]);
            if violates(x.dist(p, q), y.dist(st.f[p], st.f[q]), eps, st.relax) {
                matched[a] = true;
                matched[b] = true;
                lost += x.weight(p).min(x.weight(q));
                break;
            }
        }
    }
    lost <= eps + TOL
}

/// ε-relaxed domination: a map 1-Lipschitz up to `ε` on a domain of mass at
/// least `1 - ε` whose pushforward is `ε`-close to `μ_Y`.
pub fn lipschitz_dominates_eps<X, Y>(x: &X, y: &Y, eps: f64, budget: &Budget) -> Result<Option<EpsMap>>
where
    X: WeightedMetric + ?Sized,
    Y: WeightedMetric + ?Sized,
{
    search_eps_map(x, y, eps, Relax::Lipschitz, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{dissipation_space, scale};
    use crate::space::FiniteMmSpace;

    fn path3() -> FiniteMmSpace {
        FiniteMmSpace::from_matrix(
            vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]],
            vec![0.25, 0.5, 0.25],
        )
        .unwrap()
    }

    #[test]
    fn isomorphism_finds_reversal() {
        let x = path3();
        let y = FiniteMmSpace::from_matrix(
            vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 2.0], vec![1.0, 2.0, 0.0]],
            vec![0.5, 0.25, 0.25],
        )
        .unwrap();
        let f = mm_isomorphic(&x, &y, &Budget::default()).unwrap().unwrap();
        assert_eq!(f[1], 0);
        assert!(mm_isomorphic(&x, &scale(&y, 1.1).unwrap(), &Budget::default()).unwrap().is_none());
    }

    #[test]
    fn collapsing_a_point_dominates() {
        let x = FiniteMmSpace::two_point(1.0, 0.5).unwrap();
        let p = FiniteMmSpace::one_point();
        let b = Budget::default();
        assert_eq!(lipschitz_dominates(&x, &p, &b).unwrap(), Some(vec![0, 0]));
        assert!(lipschitz_dominates(&p, &x, &b).unwrap().is_none());
        // shrinking is 1-Lipschitz, stretching is not
        let small = scale(&x, 0.5).unwrap();
        assert!(lipschitz_dominates(&x, &small, &b).unwrap().is_some());
        assert!(lipschitz_dominates(&small, &x, &b).unwrap().is_none());
    }

    #[test]
    fn domination_respects_measure() {
        let x = FiniteMmSpace::two_point(1.0, 0.3).unwrap();
        let y = FiniteMmSpace::two_point(1.0, 0.5).unwrap();
        assert!(lipschitz_dominates(&x, &y, &Budget::default()).unwrap().is_none());
    }

    #[test]
    fn eps_zero_matches_exact_search() {
        let b = Budget::default();
        let x = path3();
        let cases = [
            FiniteMmSpace::two_point(1.0, 0.75).unwrap(),
            FiniteMmSpace::two_point(1.0, 0.5).unwrap(),
            FiniteMmSpace::two_point(2.0, 0.75).unwrap(),
            FiniteMmSpace::one_point(),
        ];
        for y in &cases {
            let exact = lipschitz_dominates(&x, y, &b).unwrap().is_some();
            let relaxed = lipschitz_dominates_eps(&x, y, 0.0, &b).unwrap().is_some();
            assert_eq!(exact, relaxed);
        }
    }

    #[test]
    fn eps_relaxation_admits_near_maps() {
        let b = Budget::default();
        let x = FiniteMmSpace::two_point(1.0, 0.5).unwrap();
        let y = FiniteMmSpace::two_point(1.1, 0.5).unwrap();
        assert!(lipschitz_dominates(&x, &y, &b).unwrap().is_none());
        let w = lipschitz_dominates_eps(&x, &y, 0.1, &b).unwrap().unwrap();
        assert!(w.satisfies(0.1));
        assert_eq!(w.domain.len(), 2);
    }

    #[test]
    fn budget_is_enforced() {
        let d = dissipation_space(10).unwrap();
        let r = lipschitz_dominates(&d, &d, &Budget::default());
        assert!(matches!(r, Err(crate::MmError::ResourceLimit(_))));
    }
}
