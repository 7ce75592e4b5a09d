//! Observable invariants: partial diameter, observable diameter, separation
//! distance and covering numbers.
//!
//! Homogeneous invariants of a [`FiniteMmSpace`] are evaluated on its shape
//! matrix and multiplied by its unit, so rescaling commutes with them exactly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::{tol_at, Budget, TOL};
use crate::error::{invalid_param, limit, MmError, Result};
use crate::flag::{CertifiedInterval, Flag};
use crate::graph::max_weight_clique;
use crate::measures::MeasureOnSpace;
use crate::space::{FiniteMmSpace, Metric, WeightedMetric};

/// The shape matrix of a space, without its unit.
struct Shape<'a>(&'a FiniteMmSpace);

impl Metric for Shape<'_> {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.0.shape_flat()[i * self.0.len() + j]
    }
}

fn distinct_levels<M: Metric + ?Sized>(m: &M, pts: &[usize]) -> Vec<f64> {
    let mut v = vec![0.0];
    for (a, &i) in pts.iter().enumerate() {
        for &j in &pts[a + 1..] {
            v.push(m.dist(i, j));
        }
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// `diam(μ; α)`: the least diameter of a set of measure at least `α`.
pub fn partial_diameter<M: Metric + ?Sized>(mu: &MeasureOnSpace<M>, alpha: f64, budget: &Budget) -> Result<f64> {
    pdiam_raw(mu.space(), mu.mass(), alpha, budget)
}

/// Partial diameter of the measure carried by `x`.
pub fn partial_diameter_space(x: &FiniteMmSpace, alpha: f64, budget: &Budget) -> Result<f64> {
    Ok(pdiam_raw(&Shape(x), x.weights(), alpha, budget)? * x.unit())
}

fn pdiam_raw<M: Metric + ?Sized>(m: &M, mass: &[f64], alpha: f64, budget: &Budget) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0 + TOL) {
        return invalid_param(format!("mass threshold must lie in (0,1], got {alpha}"));
    }
    let pts: Vec<usize> = (0..mass.len()).filter(|&i| mass[i] > 0.0).collect();
    let n = pts.len();
    if n > budget.pdiam_points.min(64) {
        return limit(format!("partial diameter on {n} points exceeds budget {}", budget.pdiam_points));
    }
    let w: Vec<f64> = pts.iter().map(|&i| mass[i]).collect();
    let levels = distinct_levels(m, &pts);
    let feasible = |d: f64| {
        let adj: Vec<u64> = (0..n)
            .map(|a| (0..n).filter(|&b| b != a && m.dist(pts[a], pts[b]) <= d).fold(0u64, |acc, b| acc | (1 << b)))
            .collect();
        max_weight_clique(&adj, &w).0 >= alpha - TOL
    };
    let (mut lo, mut hi) = (0usize, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(levels[lo])
}

/// Least width of an interval carrying mass at least `alpha` under `(value, mass)` atoms.
fn line_partial_diameter(vals: &mut [(f64, f64)], alpha: f64) -> f64 {
    vals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = f64::INFINITY;
    let mut mass = 0.0;
    let mut lo = 0;
    for hi in 0..vals.len() {
        mass += vals[hi].1;
        while lo < hi && mass - vals[lo].1 >= alpha - TOL {
            mass -= vals[lo].1;
            lo += 1;
        }
        if mass >= alpha - TOL {
            best = best.min(vals[hi].0 - vals[lo].0);
        }
    }
    best
}

/// Options for the lower-bound search of the observable diameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObsOptions {
    pub seed: u64,
    pub random_subsets: usize,
    pub restarts: usize,
    pub ascent_rounds: usize,
}

impl Default for ObsOptions {
    fn default() -> Self {
        ObsOptions {
            seed: 0x5eed,
            random_subsets: 16,
            restarts: 4,
            ascent_rounds: 20,
        }
    }
}

struct Objective<'a, M: Metric + ?Sized> {
    m: &'a M,
    w: &'a [f64],
    alpha: f64,
}

impl<M: Metric + ?Sized> Objective<'_, M> {
    fn value(&self, f: &[f64]) -> f64 {
        let mut v: Vec<(f64, f64)> = f.iter().copied().zip(self.w.iter().copied()).collect();
        line_partial_diameter(&mut v, self.alpha)
    }

    fn is_lipschitz(&self, f: &[f64]) -> bool {
        let n = f.len();
        (0..n).all(|i| ((i + 1)..n).all(|j| (f[i] - f[j]).abs() <= self.m.dist(i, j) + tol_at(self.m.dist(i, j))))
    }

    fn dist_to_set(&self, a: &[usize]) -> Vec<f64> {
        (0..self.m.len())
            .map(|i| a.iter().map(|&j| self.m.dist(i, j)).fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// Moves single coordinates to the ends of their Lipschitz range while that helps.
    fn ascend(&self, f: &mut [f64], rounds: usize) -> f64 {
        let n = f.len();
        let mut cur = self.value(f);
        for _ in 0..rounds {
            let mut improved = false;
            for i in 0..n {
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for j in 0..n {
                    if j != i {
                        lo = lo.max(f[j] - self.m.dist(i, j));
                        hi = hi.min(f[j] + self.m.dist(i, j));
                    }
                }
                let old = f[i];
                for cand in [lo, hi] {
                    f[i] = cand;
                    let v = self.value(f);
                    if v > cur {
                        cur = v;
                        improved = true;
                    } else {
                        f[i] = old;
                    }
                    if f[i] != old {
                        break;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        cur
    }
}

fn obs_lower<M: Metric + ?Sized>(m: &M, w: &[f64], kappa: f64, opts: &ObsOptions) -> f64 {
    let n = m.len();
    let obj = Objective { m, w, alpha: 1.0 - kappa };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sets: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    if n <= 40 {
        for i in 0..n {
            for j in (i + 1)..n {
                sets.push(vec![i, j]);
            }
            for &r in &distinct_levels(m, &(0..n).collect::<Vec<_>>()) {
                let ball: Vec<usize> = (0..n).filter(|&j| m.dist(i, j) <= r).collect();
                if ball.len() > 1 && ball.len() < n {
                    sets.push(ball);
                }
            }
        }
    }
    let idx: Vec<usize> = (0..n).collect();
    for _ in 0..opts.random_subsets {
        let k = rng.gen_range(1..=n);
        sets.push(idx.choose_multiple(&mut rng, k).copied().collect());
    }
    sets.sort();
    sets.dedup();
    let mut scored: Vec<(f64, Vec<f64>)> = sets
        .iter()
        .map(|a| {
            let f = obj.dist_to_set(a);
            (obj.value(&f), f)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored.first().map(|s| s.0).unwrap_or(0.0);
    let mut starts: Vec<Vec<f64>> = scored.iter().take(opts.restarts).map(|s| s.1.clone()).collect();
    for _ in 0..opts.restarts {
        // McShane extension of random values on a random anchor set
        let k = rng.gen_range(1..=n);
        let anchors: Vec<usize> = idx.choose_multiple(&mut rng, k).copied().collect();
        let vals: Vec<f64> = anchors.iter().map(|_| rng.gen_range(0.0..1.0) * m.diameter()).collect();
        let f: Vec<f64> = (0..n)
            .map(|i| {
                anchors
                    .iter()
                    .zip(&vals)
                    .map(|(&a, &v)| v + m.dist(i, a))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        starts.push(f);
    }
    for mut f in starts {
        let v = obj.ascend(&mut f, opts.ascent_rounds);
        if v > best && obj.is_lipschitz(&f) {
            best = v;
        }
    }
    best
}

/// Certified bounds on `ObsDiam(X; -κ)`.
///
/// The lower end is the best partial diameter found over 1-Lipschitz
/// functions; the upper end is the least of the diameter, the partial
/// diameter `diam(X; 1-κ)` and `Sep(X; κ/2, κ/2)`.
pub fn obs_diameter(x: &FiniteMmSpace, kappa: f64, opts: &ObsOptions, budget: &Budget) -> Result<CertifiedInterval> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return invalid_param(format!("kappa must lie in (0,1), got {kappa}"));
    }
    let s = Shape(x);
    if x.len() == 1 {
        return Ok(CertifiedInterval::new(0.0, 0.0));
    }
    let mut upper = s.diameter();
    match pdiam_raw(&s, x.weights(), 1.0 - kappa, budget) {
        Ok(v) => upper = upper.min(v),
        Err(MmError::ResourceLimit(_)) => {}
        Err(e) => return Err(e),
    }
    match sep_raw(&s, x.weights(), &[kappa / 2.0, kappa / 2.0], budget) {
        Ok(v) => upper = upper.min(v.value),
        Err(MmError::ResourceLimit(_)) => {}
        Err(e) => return Err(e),
    }
    let mut lower = obs_lower(&s, x.weights(), kappa, opts);
    if lower > upper && lower - upper <= tol_at(upper) {
        lower = upper;
    }
    let u = x.unit();
    Ok(CertifiedInterval::new(lower * u, upper * u))
}

/// A separation value with disjoint witness groups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub value: f64,
    pub groups: Vec<Vec<usize>>,
}

/// `Sep(X; κ_0, ..., κ_N)`: the largest least distance between `N + 1`
/// sets of measures at least `κ_i`; zero when no such sets exist.
pub fn separation_distance(x: &FiniteMmSpace, kappas: &[f64], budget: &Budget) -> Result<Separation> {
    let mut s = sep_raw(&Shape(x), x.weights(), kappas, budget)?;
    s.value *= x.unit();
    Ok(s)
}

fn sep_raw<M: Metric + ?Sized>(m: &M, w: &[f64], kappas: &[f64], budget: &Budget) -> Result<Separation> {
    if kappas.len() < 2 {
        return invalid_param("separation needs at least two mass thresholds");
    }
    if kappas.iter().any(|&k| !(k > 0.0)) || kappas.iter().sum::<f64>() > 1.0 + TOL {
        return invalid_param("thresholds must be positive with sum at most 1");
    }
    let n = m.len();
    if n > budget.sep_points {
        return limit(format!("separation on {n} points exceeds budget {}", budget.sep_points));
    }
    let mut levels: Vec<f64> = distinct_levels(m, &(0..n).collect::<Vec<_>>());
    levels.retain(|&v| v > 0.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    let mut nodes = 0u64;
    let mut feasible = |t: f64| -> Result<Option<Vec<Vec<usize>>>> {
        let mut st = SepSearch {
            m,
            w,
            kappas,
            order: &order,
            t,
            label: vec![usize::MAX; n],
            mass: vec![0.0; kappas.len()],
            suffix: suffix_sums(&order, w),
            nodes: &mut nodes,
            cap: budget.search_nodes,
        };
        Ok(st.run(0)?.then(|| st.groups()))
    };
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    let (mut lo, mut hi) = (0usize, levels.len());
    // largest feasible level; feasibility only weakens as t grows
    while lo < hi {
        let mid = (lo + hi) / 2;
        match feasible(levels[mid])? {
            Some(g) => {
                best = Some((levels[mid], g));
                lo = mid + 1;
            }
            None => hi = mid,
        }
    }
    Ok(match best {
        Some((value, groups)) => Separation { value, groups },
        None => Separation {
            value: 0.0,
            groups: Vec::new(),
        },
    })
}

fn suffix_sums(order: &[usize], w: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; order.len() + 1];
    for k in (0..order.len()).rev() {
        s[k] = s[k + 1] + w[order[k]];
    }
    s
}

struct SepSearch<'a, M: Metric + ?Sized> {
    m: &'a M,
    w: &'a [f64],
    kappas: &'a [f64],
    order: &'a [usize],
    t: f64,
    label: Vec<usize>,
    mass: Vec<f64>,
    suffix: Vec<f64>,
    nodes: &'a mut u64,
    cap: u64,
}

impl<M: Metric + ?Sized> SepSearch<'_, M> {
    fn deficit(&self, c: usize) -> f64 {
        self.kappas[c] - self.mass[c]
    }

    fn groups(&self) -> Vec<Vec<usize>> {
        (0..self.kappas.len())
            .map(|c| (0..self.label.len()).filter(|&i| self.label[i] == c).collect())
            .collect()
    }

    fn run(&mut self, depth: usize) -> Result<bool> {
        *self.nodes += 1;
        if *self.nodes > self.cap {
            return limit(format!("separation search exceeded {} nodes", self.cap));
        }
        let groups = self.kappas.len();
        let open: f64 = (0..groups).map(|c| self.deficit(c).max(0.0)).sum();
        if (0..groups).all(|c| self.deficit(c) <= TOL) {
            return Ok(true);
        }
        if depth == self.order.len() || open > self.suffix[depth] + TOL {
            return Ok(false);
        }
        let p = self.order[depth];
        let mut forced: Option<usize> = None;
        let mut blocked = false;
        for &q in &self.order[..depth] {
            let c = self.label[q];
            if c != usize::MAX && self.m.dist(p, q) < self.t {
                match forced {
                    None => forced = Some(c),
                    Some(f) if f != c => blocked = true,
                    _ => {}
                }
            }
        }
        if !blocked {
            let cands: Vec<usize> = match forced {
                Some(c) => vec![c],
                None => (0..groups).collect(),
            };
            let mut tried_empty: Vec<f64> = Vec::new();
            for c in cands {
                if self.deficit(c) <= TOL {
                    continue;
                }
                if self.mass[c] == 0.0 {
                    // empty groups with equal thresholds are interchangeable
                    if tried_empty.contains(&self.kappas[c]) {
                        continue;
                    }
                    tried_empty.push(self.kappas[c]);
                }
                self.label[p] = c;
                self.mass[c] += self.w[p];
                if self.run(depth + 1)? {
                    return Ok(true);
                }
                self.mass[c] -= self.w[p];
                self.label[p] = usize::MAX;
            }
        }
        self.run(depth + 1)
    }
}

/// A partial covering by closed balls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub count: usize,
    pub centers: Vec<usize>,
    pub flag: Flag,
}

/// `Cov(X; r, κ)`: the least number of closed `r`-balls centred in `X`
/// covering measure at least `1 - κ`.
pub fn covering_number(x: &FiniteMmSpace, r: f64, kappa: f64, budget: &Budget) -> Result<Cover> {
    if !(r > 0.0) {
        return invalid_param(format!("radius must be positive, got {r}"));
    }
    if !(kappa >= 0.0) {
        return invalid_param(format!("kappa must be nonnegative, got {kappa}"));
    }
    let n = x.len();
    let target = 1.0 - kappa;
    if target <= TOL {
        return Ok(Cover {
            count: 0,
            centers: Vec::new(),
            flag: Flag::Exact,
        });
    }
    let w = x.weights();
    let balls: Vec<Vec<usize>> = (0..n).map(|c| (0..n).filter(|&j| x.dist(c, j) <= r).collect()).collect();
    let greedy = greedy_cover(&balls, w, target);
    if n > budget.cov_points.min(64) {
        return Ok(Cover {
            count: greedy.len(),
            centers: greedy,
            flag: Flag::Upper,
        });
    }
    let masks: Vec<u64> = balls.iter().map(|b| b.iter().fold(0u64, |m, &j| m | (1 << j))).collect();
    // drop duplicate and dominated balls, keeping the lowest centre
    let mut useful: Vec<usize> = Vec::new();
    for c in 0..n {
        let dominated = (0..n).any(|d| {
            d != c && masks[c] & !masks[d] == 0 && (masks[c] != masks[d] || d < c)
        });
        if !dominated {
            useful.push(c);
        }
    }
    let mut sorted_mass: Vec<f64> = useful.iter().map(|&c| mask_mass(masks[c], w)).collect();
    sorted_mass.sort_by(|a, b| b.total_cmp(a));
    let mut lb = 0;
    let mut acc = 0.0;
    while acc < target - TOL && lb < sorted_mass.len() {
        acc += sorted_mass[lb];
        lb += 1;
    }
    let mut search = CoverSearch {
        masks: &masks,
        useful: &useful,
        w,
        target,
        kappa,
        chosen: Vec::new(),
        abandoned: Vec::new(),
        nodes: 0,
        cap: budget.search_nodes,
    };
    for k in lb.max(1)..greedy.len() {
        if search.run(k, 0, 0.0)? {
            let mut centers = search.chosen.clone();
            centers.sort_unstable();
            return Ok(Cover {
                count: k,
                centers,
                flag: Flag::Exact,
            });
        }
    }
    Ok(Cover {
        count: greedy.len(),
        centers: greedy,
        flag: Flag::Exact,
    })
}

fn mask_mass(mask: u64, w: &[f64]) -> f64 {
    (0..w.len()).filter(|&i| mask & (1 << i) != 0).map(|i| w[i]).sum()
}

fn greedy_cover(balls: &[Vec<usize>], w: &[f64], target: f64) -> Vec<usize> {
    let n = w.len();
    let mut covered = vec![false; n];
    let mut mass = 0.0;
    let mut chosen = Vec::new();
    while mass < target - TOL {
        let gain = |c: usize| balls[c].iter().filter(|&&j| !covered[j]).map(|&j| w[j]).sum::<f64>();
        let best = (0..balls.len()).max_by(|&a, &b| gain(a).total_cmp(&gain(b)).then(b.cmp(&a))).unwrap();
        for &j in &balls[best] {
            if !covered[j] {
                covered[j] = true;
                mass += w[j];
            }
        }
        chosen.push(best);
    }
    chosen.sort_unstable();
    chosen
}

struct CoverSearch<'a> {
    masks: &'a [u64],
    useful: &'a [usize],
    w: &'a [f64],
    target: f64,
    kappa: f64,
    chosen: Vec<usize>,
    abandoned: Vec<usize>,
    nodes: u64,
    cap: u64,
}

impl CoverSearch<'_> {
    fn given_up(&self, i: usize) -> bool {
        self.abandoned.contains(&i)
    }

    /// Branches on the heaviest point neither covered nor given up:
    /// either some ball through it is chosen, or its mass is written off.
    fn run(&mut self, k: usize, covered: u64, lost: f64) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return limit(format!("covering search exceeded {} nodes", self.cap));
        }
        let have = mask_mass(covered, self.w);
        if have >= self.target - TOL {
            return Ok(true);
        }
        let left = k - self.chosen.len();
        if left == 0 {
            return Ok(false);
        }
        let mut gains: Vec<f64> = self.useful.iter().map(|&c| mask_mass(self.masks[c] & !covered, self.w)).collect();
        gains.sort_by(|a, b| b.total_cmp(a));
        if have + gains.iter().take(left).sum::<f64>() < self.target - TOL {
            return Ok(false);
        }
        let n = self.w.len();
        let p = (0..n)
            .filter(|&i| covered & (1 << i) == 0)
            .filter(|&i| !self.given_up(i))
            .max_by(|&a, &b| self.w[a].total_cmp(&self.w[b]).then(b.cmp(&a)));
        let Some(p) = p else { return Ok(false) };
        let mut through: Vec<usize> = self.useful.iter().copied().filter(|&c| self.masks[c] & (1 << p) != 0).collect();
        through.sort_by(|&a, &b| {
            mask_mass(self.masks[b] & !covered, self.w)
                .total_cmp(&mask_mass(self.masks[a] & !covered, self.w))
                .then(a.cmp(&b))
        });
        for c in through {
            self.chosen.push(c);
            if self.run(k, covered | self.masks[c], lost)? {
                return Ok(true);
            }
            self.chosen.pop();
        }
        if lost + self.w[p] <= self.kappa + TOL {
            self.abandoned.push(p);
            let ok = self.run(k, covered, lost + self.w[p])?;
            self.abandoned.pop();
            return Ok(ok);
        }
        Ok(false)
    }
}

/// A minimal set of centres whose closed `ε`-balls carry mass at least `1 - ε`.
pub fn eps_supporting_net(x: &FiniteMmSpace, eps: f64, budget: &Budget) -> Result<Cover> {
    covering_number(x, eps, eps, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{dissipation_space, scale};
    use crate::testutil::arb_space;
    use proptest::prelude::*;

    fn path3() -> FiniteMmSpace {
        FiniteMmSpace::from_matrix(
            vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]],
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        )
        .unwrap()
    }

    /// Least diameter over all subsets of mass at least `alpha`.
    fn pdiam_by_subsets(x: &FiniteMmSpace, alpha: f64) -> f64 {
        let n = x.len();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << n) {
            let s: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let mass: f64 = s.iter().map(|&i| x.weight(i)).sum();
            if mass >= alpha - TOL {
                let d = s.iter().flat_map(|&i| s.iter().map(move |&j| (i, j))).map(|(i, j)| x.dist(i, j)).fold(0.0, f64::max);
                best = best.min(d);
            }
        }
        best
    }

    /// Sep by assigning every point to one of the groups or to none.
    fn sep_by_labellings(x: &FiniteMmSpace, kappas: &[f64]) -> f64 {
        let n = x.len();
        let g = kappas.len();
        let mut best = 0.0f64;
        let total = (g + 1).pow(n as u32);
        for code in 0..total {
            let mut c = code;
            let mut lab = vec![0; n];
            for l in lab.iter_mut() {
                *l = c % (g + 1);
                c /= g + 1;
            }
            let ok = (0..g).all(|k| (0..n).filter(|&i| lab[i] == k + 1).map(|i| x.weight(i)).sum::<f64>() >= kappas[k] - TOL);
            if !ok {
                continue;
            }
            let mut sep = f64::INFINITY;
            for i in 0..n {
                for j in 0..n {
                    if lab[i] != 0 && lab[j] != 0 && lab[i] != lab[j] {
                        sep = sep.min(x.dist(i, j));
                    }
                }
            }
            best = best.max(sep);
        }
        best
    }

    fn cov_by_subsets(x: &FiniteMmSpace, r: f64, kappa: f64) -> usize {
        let n = x.len();
        let mut best = usize::MAX;
        for mask in 0u32..(1 << n) {
            let mass: f64 = (0..n)
                .filter(|&j| (0..n).any(|c| mask & (1 << c) != 0 && x.dist(c, j) <= r))
                .map(|j| x.weight(j))
                .sum();
            if mass >= 1.0 - kappa - TOL {
                best = best.min(mask.count_ones() as usize);
            }
        }
        best
    }

    #[test]
    fn partial_diameter_of_a_path() {
        let b = Budget::default();
        let x = path3();
        // two adjacent points carry only 2/3 < 0.7
        assert_eq!(partial_diameter_space(&x, 0.7, &b).unwrap(), 2.0);
        assert_eq!(partial_diameter_space(&x, 0.6, &b).unwrap(), 1.0);
        assert_eq!(partial_diameter_space(&x, 0.3, &b).unwrap(), 0.0);
        assert_eq!(pdiam_by_subsets(&x, 0.7), 2.0);
    }

    #[test]
    fn two_point_observable_diameter() {
        let b = Budget::default();
        let o = ObsOptions::default();
        for l in [0.5, 1.0, 3.0] {
            let x = FiniteMmSpace::two_point(l, 0.5).unwrap();
            assert_eq!(obs_diameter(&x, 0.3, &o, &b).unwrap(), CertifiedInterval::new(l, l));
            assert_eq!(obs_diameter(&x, 0.6, &o, &b).unwrap(), CertifiedInterval::new(0.0, 0.0));
        }
        let p = FiniteMmSpace::one_point();
        assert_eq!(obs_diameter(&p, 0.1, &o, &b).unwrap(), CertifiedInterval::new(0.0, 0.0));
    }

    #[test]
    fn separation_ignores_intermediate_points() {
        // the middle point links both ends but need not belong to a group
        let b = Budget::default();
        let s = separation_distance(&path3(), &[1.0 / 3.0, 1.0 / 3.0], &b).unwrap();
        assert_eq!(s.value, 2.0);
        assert_eq!(s.groups, vec![vec![0], vec![2]]);
    }

    #[test]
    fn separation_infeasible_is_zero() {
        let b = Budget::default();
        let x = FiniteMmSpace::two_point(1.0, 0.5).unwrap();
        assert_eq!(separation_distance(&x, &[0.6, 0.4], &b).unwrap().value, 0.0);
        assert!(separation_distance(&x, &[0.6], &b).is_err());
        assert!(separation_distance(&x, &[0.6, 0.6], &b).is_err());
    }

    #[test]
    fn dissipation_invariants() {
        let b = Budget::default();
        for n in [4usize, 8, 16] {
            let d = dissipation_space(n).unwrap();
            assert_eq!(separation_distance(&d, &[0.25, 0.25], &b).unwrap().value, n as f64);
            let c = covering_number(&d, 0.5, 0.25, &b).unwrap();
            assert_eq!(c.count, (3 * n).div_ceil(4));
            assert_eq!(c.flag, Flag::Exact);
            assert_eq!(eps_supporting_net(&d, 0.25, &b).unwrap().count, (3 * n).div_ceil(4));
        }
    }

    #[test]
    fn covering_extremes() {
        let b = Budget::default();
        let x = path3();
        assert_eq!(covering_number(&x, 5.0, 0.1, &b).unwrap().count, 1);
        assert_eq!(covering_number(&x, 1.0, 0.0, &b).unwrap().count, 1);
        assert_eq!(covering_number(&x, 0.5, 0.0, &b).unwrap().count, 3);
        assert_eq!(covering_number(&x, 0.5, 1.0, &b).unwrap().count, 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn partial_diameter_matches_subsets(x in arb_space(1, 7), alpha in 0.05f64..1.0) {
            let b = Budget::default();
            prop_assert_eq!(partial_diameter_space(&x, alpha, &b).unwrap(), pdiam_by_subsets(&x, alpha));
        }

        #[test]
        fn separation_matches_labellings(x in arb_space(2, 6), k0 in 0.05f64..0.5, k1 in 0.05f64..0.5) {
            let b = Budget::default();
            let s = separation_distance(&x, &[k0, k1], &b).unwrap();
            prop_assert_eq!(s.value, sep_by_labellings(&x, &[k0, k1]));
        }

        #[test]
        fn three_group_separation(x in arb_space(3, 6), k in 0.05f64..0.33) {
            let b = Budget::default();
            let s = separation_distance(&x, &[k, k, k], &b).unwrap();
            prop_assert_eq!(s.value, sep_by_labellings(&x, &[k, k, k]));
        }

        #[test]
        fn covering_matches_subsets(x in arb_space(1, 8), r in 0.01f64..1.0, kappa in 0.0f64..0.9) {
            let b = Budget::default();
            let c = covering_number(&x, r, kappa, &b).unwrap();
            prop_assert_eq!(c.count, cov_by_subsets(&x, r, kappa));
        }

        #[test]
        fn observable_diameter_interval_is_sound(x in arb_space(1, 7), kappa in 0.02f64..0.98) {
            let b = Budget::default();
            let iv = obs_diameter(&x, kappa, &ObsOptions::default(), &b).unwrap();
            prop_assert!(iv.lower <= iv.upper);
            prop_assert!(iv.upper <= x.diameter());
            prop_assert!(iv.upper <= partial_diameter_space(&x, 1.0 - kappa, &b).unwrap());
        }

        #[test]
        fn sandwich_with_separation(x in arb_space(2, 7), k in 0.05f64..0.45, shrink in 0.1f64..0.99) {
            let b = Budget::default();
            let sep = separation_distance(&x, &[k, k], &b).unwrap().value;
            let iv = obs_diameter(&x, k * shrink, &ObsOptions::default(), &b).unwrap();
            prop_assert!(sep <= iv.upper);
        }

        #[test]
        fn homogeneous_under_scaling(x in arb_space(2, 7), kappa in 0.05f64..0.45, ti in 0usize..3) {
            let t = [0.5, 2.0, 10.0][ti];
            let b = Budget::default();
            let o = ObsOptions::default();
            let y = scale(&x, t).unwrap();
            let (ix, iy) = (obs_diameter(&x, kappa, &o, &b).unwrap(), obs_diameter(&y, kappa, &o, &b).unwrap());
            prop_assert_eq!(iy.lower, t * ix.lower);
            prop_assert_eq!(iy.upper, t * ix.upper);
            let (sx, sy) = (separation_distance(&x, &[kappa, kappa], &b).unwrap(), separation_distance(&y, &[kappa, kappa], &b).unwrap());
            prop_assert_eq!(sy.value, t * sx.value);
            prop_assert_eq!(partial_diameter_space(&y, 1.0 - kappa, &b).unwrap(), t * partial_diameter_space(&x, 1.0 - kappa, &b).unwrap());
        }
    }
}
