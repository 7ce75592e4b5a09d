//! Small combinatorial kernels: union-find, integer max-flow, weighted cliques.

use std::collections::VecDeque;

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Components as sorted index lists, ordered by smallest member.
    pub(crate) fn components(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let r = self.find(i);
            by_root[r].push(i);
        }
        by_root.into_iter().filter(|c| !c.is_empty()).collect()
    }
}

/// Fixed-point scale for masses fed to the integer max-flow.
pub(crate) const MASS_SCALE: f64 = (1u64 << 40) as f64;

/// Rounds masses to integers with the largest-remainder rule, so the
/// integer total equals the rounded real total.
pub(crate) fn quantize(masses: &[f64]) -> Vec<i64> {
    let total: f64 = masses.iter().sum();
    let target = (total * MASS_SCALE).round() as i64;
    let mut q: Vec<i64> = masses.iter().map(|&m| (m * MASS_SCALE).floor() as i64).collect();
    let mut rest = target - q.iter().sum::<i64>();
    if rest > 0 {
        let mut order: Vec<usize> = (0..masses.len()).collect();
        let frac = |i: usize| masses[i] * MASS_SCALE - q[i] as f64;
        order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
        for &i in order.iter().cycle() {
            if rest == 0 {
                break;
            }
            if masses[i] > 0.0 {
                q[i] += 1;
                rest -= 1;
            }
        }
    }
    q
}

struct Edge {
    to: usize,
    cap: i64,
}

/// Dinic's algorithm on integer capacities.
pub(crate) struct MaxFlow {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl MaxFlow {
    pub(crate) fn new(n: usize) -> Self {
        MaxFlow {
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
            level: vec![0; n],
            iter: vec![0; n],
        }
    }

    pub(crate) fn add_edge(&mut self, from: usize, to: usize, cap: i64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge { to: from, cap: 0 });
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &e in &self.adj[u] {
                let v = self.edges[e].to;
                if self.edges[e].cap > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, f: i64) -> i64 {
        if u == t {
            return f;
        }
        while self.iter[u] < self.adj[u].len() {
            let e = self.adj[u][self.iter[u]];
            let v = self.edges[e].to;
            if self.edges[e].cap > 0 && self.level[v] == self.level[u] + 1 {
                let d = self.dfs(v, t, f.min(self.edges[e].cap));
                if d > 0 {
                    self.edges[e].cap -= d;
                    self.edges[e ^ 1].cap += d;
                    return d;
                }
            }
            self.iter[u] += 1;
        }
        0
    }

    pub(crate) fn run(&mut self, s: usize, t: usize) -> i64 {
        let mut flow = 0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, i64::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
    }
}

/// Maximum transported mass between integer supplies and demands using
/// only the allowed `(i, j)` edges.
pub(crate) fn bipartite_flow(supply: &[i64], demand: &[i64], allowed: impl Fn(usize, usize) -> bool) -> i64 {
    let (n, m) = (supply.len(), demand.len());
    let s = n + m;
    let t = s + 1;
    let mut g = MaxFlow::new(n + m + 2);
    for (i, &c) in supply.iter().enumerate() {
        if c > 0 {
            g.add_edge(s, i, c);
        }
    }
    for (j, &c) in demand.iter().enumerate() {
        if c > 0 {
            g.add_edge(n + j, t, c);
        }
    }
    for i in 0..n {
        if supply[i] == 0 {
            continue;
        }
        for j in 0..m {
            if demand[j] > 0 && allowed(i, j) {
                g.add_edge(i, n + j, i64::MAX / 4);
            }
        }
    }
    g.run(s, t)
}

/// Maximum total weight of a clique in a graph on at most 64 vertices,
/// given as adjacency bitmasks. Returns the weight and the clique mask.
pub(crate) fn max_weight_clique(adj: &[u64], w: &[f64]) -> (f64, u64) {
    let n = adj.len();
    assert!(n <= 64);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    let mut best = (0.0, 0u64);
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    clique_rec(adj, w, &order, 0, 0.0, all, &mut best);
    best
}

fn mask_weight(mask: u64, w: &[f64]) -> f64 {
    let mut m = mask;
    let mut s = 0.0;
    while m != 0 {
        let i = m.trailing_zeros() as usize;
        s += w[i];
        m &= m - 1;
    }
    s
}

fn clique_rec(adj: &[u64], w: &[f64], order: &[usize], cur: u64, cur_w: f64, cand: u64, best: &mut (f64, u64)) {
    if cur_w > best.0 {
        *best = (cur_w, cur);
    }
    if cand == 0 || cur_w + mask_weight(cand, w) <= best.0 {
        return;
    }
    let mut cand = cand;
    for &v in order {
        if cand & (1 << v) == 0 {
            continue;
        }
        if cur_w + mask_weight(cand, w) <= best.0 {
            return;
        }
        clique_rec(adj, w, order, cur | (1 << v), cur_w + w[v], cand & adj[v], best);
        cand &= !(1 << v);
    }
}

/// Maximum-weight independent set on at most 64 vertices.
pub(crate) fn max_weight_independent_set(conflict: &[u64], w: &[f64]) -> (f64, u64) {
    let n = conflict.len();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let comp: Vec<u64> = (0..n).map(|i| !conflict[i] & all & !(1 << i)).collect();
    max_weight_clique(&comp, w)
}

/// Greedy independent set by descending weight.
pub(crate) fn greedy_independent_set(conflict: &dyn Fn(usize, usize) -> bool, w: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = Vec::new();
    for v in order {
        if chosen.iter().all(|&u| !conflict(u, v)) {
            chosen.push(v);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// All maximal cliques (Bron–Kerbosch with pivoting); the callback may stop
/// the enumeration by returning `false`.
pub(crate) fn maximal_cliques(adj: &[u64], visit: &mut dyn FnMut(u64) -> bool) {
    let n = adj.len();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    bk(adj, 0, all, 0, visit);
}

fn bk(adj: &[u64], r: u64, p: u64, x: u64, visit: &mut dyn FnMut(u64) -> bool) -> bool {
    if p == 0 && x == 0 {
        return visit(r);
    }
    let px = p | x;
    let mut pivot = px.trailing_zeros() as usize;
    let mut best = 0;
    let mut m = px;
    while m != 0 {
        let u = m.trailing_zeros() as usize;
        let c = (p & adj[u]).count_ones();
        if c >= best {
            best = c;
            pivot = u;
        }
        m &= m - 1;
    }
    let mut cand = p & !adj[pivot];
    let (mut p, mut x) = (p, x);
    while cand != 0 {
        let v = cand.trailing_zeros() as usize;
        let bit = 1u64 << v;
        if !bk(adj, r | bit, p & adj[v], x & adj[v], visit) {
            return false;
        }
        p &= !bit;
        x |= bit;
        cand &= !bit;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_preserves_total() {
        let m = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        let q = quantize(&m);
        assert_eq!(q.iter().sum::<i64>(), MASS_SCALE as i64);
    }

    #[test]
    fn flow_on_small_network() {
        let mut g = MaxFlow::new(4);
        g.add_edge(0, 1, 3);
        g.add_edge(0, 2, 2);
        g.add_edge(1, 2, 5);
        g.add_edge(1, 3, 2);
        g.add_edge(2, 3, 3);
        assert_eq!(g.run(0, 3), 5);
    }

    #[test]
    fn clique_and_independent_set() {
        // path 0-1-2-3 with weights
        let adj = [0b0010u64, 0b0101, 0b1010, 0b0100];
        let w = [1.0, 3.0, 1.0, 2.5];
        let (cw, _) = max_weight_clique(&adj, &w);
        assert_eq!(cw, 4.0);
        let (iw, mask) = max_weight_independent_set(&adj, &w);
        assert_eq!(iw, 5.5);
        assert_eq!(mask, 0b1010);
    }

    #[test]
    fn maximal_cliques_of_a_triangle_plus_edge() {
        let adj = [0b0110u64, 0b0101, 0b1011, 0b0100];
        let mut found = Vec::new();
        maximal_cliques(&adj, &mut |c| {
            found.push(c);
            true
        });
        found.sort_unstable();
        assert_eq!(found, vec![0b0111, 0b1100]);
    }

    #[test]
    fn union_find_components() {
        let mut uf = UnionFind::new(5);
        uf.union(3, 1);
        uf.union(4, 0);
        assert_eq!(uf.components(), vec![vec![0, 4], vec![1, 3], vec![2]]);
    }
}
