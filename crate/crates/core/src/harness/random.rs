//! Seeded random instances.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::space::{FiniteMmSpace, Metric, WeightVector, WeightedMetric};

/// Smallest admissible distance between distinct random points.
const MIN_GAP: f64 = 1e-6;
/// Weights below this are pruned.
const MIN_WEIGHT: f64 = 1e-9;

/// Dirichlet(1, ..., 1) weights from normalized exponential samples.
pub fn dirichlet(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

/// `n` points of `[0,1]^dim` at pairwise sup distance at least `MIN_GAP`.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    loop {
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect();
        let ok = (0..n).all(|i| ((i + 1)..n).all(|j| sup_dist(&pts[i], &pts[j]) >= MIN_GAP));
        if ok {
            return pts;
        }
    }
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// The sup-metric space on `pts` with weights `w`; near-zero weights are pruned.
pub fn embedded_space(pts: &[Vec<f64>], w: &[f64]) -> FiniteMmSpace {
    let keep: Vec<usize> = (0..pts.len()).filter(|&i| w[i] > MIN_WEIGHT).collect();
    let total: f64 = keep.iter().map(|&i| w[i]).sum();
    let rows = keep
        .iter()
        .map(|&i| keep.iter().map(|&j| sup_dist(&pts[i], &pts[j])).collect())
        .collect();
    let w = keep.iter().map(|&i| w[i] / total).collect();
    FiniteMmSpace::from_matrix(rows, w).expect("embedded points form a metric space")
}

/// A random space with `min_n..=max_n` points.
///
/// Points come from a random `ℓ∞` cube of dimension 1 to 4. Half of the
/// spaces are then perturbed by random stretch factors and repaired by
/// shortest-path closure.
pub fn random_space(rng: &mut ChaCha8Rng, min_n: usize, max_n: usize) -> FiniteMmSpace {
    let n = rng.gen_range(min_n..=max_n);
    let dim = rng.gen_range(1..=4);
    let pts = random_points(rng, n, dim);
    let w = dirichlet(rng, n);
    let x = embedded_space(&pts, &w);
    if rng.gen_bool(0.5) {
        perturb(rng, &x)
    } else {
        x
    }
}

fn perturb(rng: &mut ChaCha8Rng, x: &FiniteMmSpace) -> FiniteMmSpace {
    let n = x.len();
    let mut d = x.dist_rows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = d[i][j] * rng.gen_range(1.0..1.5);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    FiniteMmSpace::new(x.labels().to_vec(), d, x.weights().to_vec()).expect("closure preserves the metric")
}

/// A random probability vector on `n` points with a random nonempty support.
pub fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let k = rng.gen_range(1..=n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let w = dirichlet(rng, k);
    let mut mu = vec![0.0; n];
    for (a, &i) in idx[..k].iter().enumerate() {
        mu[i] = w[a];
    }
    mu
}

/// A random element of `𝒜₁` with `1..=max_len` positive entries.
pub fn random_a1(rng: &mut ChaCha8Rng, max_len: usize) -> WeightVector {
    let n = rng.gen_range(1..=max_len);
    let w = dirichlet(rng, n);
    let s: f64 = w.iter().sum();
    let mut w: Vec<f64> = w.iter().map(|x| x / s).collect();
    // absorb rounding so the entries sum to one within tolerance
    let rest = 1.0 - w.iter().sum::<f64>();
    w[0] += rest;
    WeightVector::a1(w).expect("normalized weights")
}

/// A random nonempty subset of `0..n`, sorted.
pub fn random_subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    loop {
        let s: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn spaces_are_valid_and_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = random_space(&mut a, 2, 8);
            x.validate().unwrap();
            assert_eq!(x, random_space(&mut b, 2, 8));
        }
    }

    #[test]
    fn measures_and_weights_are_normalized() {
        let mut r = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let mu = random_measure(&mut r, 6);
            assert!((mu.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((random_a1(&mut r, 4).l1() - 1.0).abs() < 1e-12);
        }
    }
}
