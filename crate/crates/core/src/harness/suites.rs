//! Named suites: instance generators and their default parameters.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::instances::Instance;
use super::random::{dirichlet, embedded_space, random_a1, random_measure, random_points, random_space, random_subset};
use super::{run_instances, CheckReport, RunConfig};
use crate::error::{invalid_param, Result};
use crate::space::{FiniteMmSpace, Metric, WeightVector};

/// Theorem-check suites, in the order `all` runs them.
pub const CHECK_SUITES: &[&str] = &["prokhorov", "metric-lemmas", "sum-bounds", "invariant-lemmas", "algebraic-laws"];

/// Experiments, in the order `all` runs them.
pub const EXPERIMENTS: &[&str] = &["dissipation", "ball-decay", "wedge", "decomposition"];

/// Independent stream `i` under `seed`.
fn instance_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(i as u64);
    r
}

fn generate(seed: u64, count: usize, f: impl Fn(usize, &mut ChaCha8Rng) -> Instance + Sync) -> Vec<Instance> {
    (0..count).into_par_iter().map(|i| f(i, &mut instance_rng(seed, i))).collect()
}

/// `d_P` by max-flow against the subset oracle.
pub fn check_prokhorov(cfg: &RunConfig) -> CheckReport {
    let instances = generate(cfg.seed, cfg.count.unwrap_or(500), |_, rng| {
        let space = random_space(rng, 2, 10);
        let n = space.len();
        Instance::Prokhorov {
            mu: random_measure(rng, n),
            nu: random_measure(rng, n),
            space,
        }
    });
    run_instances("prokhorov", instances, cfg)
}

/// Moves every point of `x` by at most `jitter` in the sup metric and
/// reweights it slightly.
fn jittered(rng: &mut ChaCha8Rng, pts: &[Vec<f64>], w: &[f64], jitter: f64) -> FiniteMmSpace {
    loop {
        let q: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| p.iter().map(|c| c + rng.gen_range(-jitter..=jitter)).collect())
            .collect();
        let ok = (0..q.len()).all(|i| ((i + 1)..q.len()).all(|j| super::random::sup_dist(&q[i], &q[j]) >= 1e-6));
        if ok {
            let v: Vec<f64> = w.iter().map(|x| x * rng.gen_range(0.8..1.25)).collect();
            let s: f64 = v.iter().sum();
            let v: Vec<f64> = v.iter().map(|x| x / s).collect();
            return embedded_space(&q, &v);
        }
    }
}

/// `d_P ≤ d_TV`, `□ ≤ 2 d_P`, `□ ≤ 3ε` under certificates and the
/// restriction bound `□(A, X) ≤ 4(1 - μ(A))`. Instance 0 compares two Dirac
/// measures.
pub fn check_metric_lemmas(cfg: &RunConfig) -> CheckReport {
    let instances = generate(cfg.seed, cfg.count.unwrap_or(200), |i, rng| {
        if i == 0 {
            let x = FiniteMmSpace::two_point(0.3, 0.5).expect("valid");
            return Instance::MetricLemmas {
                space: x.clone(),
                mu: vec![1.0, 0.0],
                nu: vec![0.0, 1.0],
                perturbed: x,
                search_eps: 0.1,
                subset: vec![0],
                seed: cfg.seed,
            };
        }
        let n = rng.gen_range(2..=4);
        let dim = rng.gen_range(1..=3);
        let pts = random_points(rng, n, dim);
        let w = dirichlet(rng, n);
        let space = embedded_space(&pts, &w);
        let n = space.len();
        let jitter = rng.gen_range(0.0..0.2);
        Instance::MetricLemmas {
            mu: random_measure(rng, n),
            nu: random_measure(rng, n),
            perturbed: jittered(rng, &pts, &w, jitter),
            search_eps: rng.gen_range(0.05..0.5),
            subset: random_subset(rng, n),
            seed: rng.gen(),
            space,
        }
    });
    run_instances("metric-lemmas", instances, cfg)
}

/// Sum bounds with proof-map witnesses; the first instances pin the gap
/// below two, where the `2^{-r/2}` term carries the bound.
pub fn check_sum_bounds(cfg: &RunConfig) -> CheckReport {
    const GAPS: [f64; 7] = [0.5, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0];
    let instances = generate(cfg.seed, cfg.count.unwrap_or(100), |i, rng| {
        let a = random_a1(rng, 3);
        let b = random_a1(rng, 3);
        let shared = rng.gen_range(1..=a.len().min(b.len()));
        let parts: Vec<FiniteMmSpace> = (0..a.len()).map(|_| random_space(rng, 1, 3)).collect();
        let others: Vec<FiniteMmSpace> = (shared..b.len()).map(|_| random_space(rng, 1, 3)).collect();
        let gap = if i < 2 { GAPS[i] } else { *GAPS.choose(rng).expect("nonempty") };
        Instance::SumBounds {
            parts,
            a,
            others,
            b,
            shared,
            gap,
            maps: 12,
            seed: rng.gen(),
        }
    });
    run_instances("sum-bounds", instances, cfg)
}

/// A space from random points with a dominated projection of it.
fn domination_pair(rng: &mut ChaCha8Rng) -> (FiniteMmSpace, FiniteMmSpace) {
    let n = rng.gen_range(2..=7);
    let dim = rng.gen_range(1..=4);
    let pts = random_points(rng, n, dim);
    let w = dirichlet(rng, n);
    let fine = embedded_space(&pts, &w);
    // coordinate projection and contraction are 1-Lipschitz for the sup metric
    let coords = random_subset(rng, dim);
    let c = rng.gen_range(0.5..=1.0);
    let mut merged: Vec<(Vec<f64>, f64)> = Vec::new();
    for (p, &m) in pts.iter().zip(&w) {
        let q: Vec<f64> = coords.iter().map(|&k| c * p[k]).collect();
        match merged.iter_mut().find(|(r, _)| super::random::sup_dist(r, &q) == 0.0) {
            Some(e) => e.1 += m,
            None => merged.push((q, m)),
        }
    }
    let (qp, qw): (Vec<Vec<f64>>, Vec<f64>) = merged.into_iter().unzip();
    (fine, embedded_space(&qp, &qw))
}

/// Scale covariance, the Sep/ObsDiam sandwich and Cov monotonicity under
/// verified domination.
pub fn check_invariant_lemmas(cfg: &RunConfig) -> CheckReport {
    let instances = generate(cfg.seed, cfg.count.unwrap_or(100), |_, rng| {
        let (space, coarse) = domination_pair(rng);
        let diam = space.diameter();
        let cov_params = (0..5)
            .map(|_| (rng.gen_range(0.05..=1.0) * diam, rng.gen_range(0.05..0.5)))
            .collect();
        Instance::InvariantLemmas {
            space,
            coarse,
            kappa: rng.gen_range(0.05..0.45),
            cov_params,
            scales: vec![0.5, 2.0, 10.0],
        }
    });
    run_instances("invariant-lemmas", instances, cfg)
}

const EXPONENTS: [f64; 3] = [1.0, 2.0, f64::INFINITY];

/// Associativity, distributivity and scaling of sums as exact isomorphisms.
/// The isomorphism budget is raised to cover products of sums.
pub fn check_algebraic_laws(cfg: &RunConfig) -> CheckReport {
    let count = cfg.count.unwrap_or(100);
    let instances = generate(cfg.seed, 3 * count, |i, rng| match i % 3 {
        0 => {
            let a = random_a1(rng, 4);
            let parts = (0..a.len()).map(|_| random_space(rng, 1, 3)).collect();
            let groups = (0..a.len()).map(|_| rng.gen_range(0..2)).collect();
            Instance::Associativity { parts, a, groups }
        }
        1 => {
            let a = random_a1(rng, 2);
            let b = random_a1(rng, 2);
            Instance::Distributivity {
                xs: (0..a.len()).map(|_| random_space(rng, 1, 3)).collect(),
                ys: (0..b.len()).map(|_| random_space(rng, 1, 3)).collect(),
                a,
                b,
                p: *EXPONENTS.choose(rng).expect("nonempty"),
            }
        }
        _ => {
            let a = random_a1(rng, 3);
            Instance::ScaleSum {
                parts: (0..a.len()).map(|_| random_space(rng, 1, 3)).collect(),
                a,
                gap: rng.gen_range(0.5..5.0),
                t: rng.gen_range(0.1..10.0),
            }
        }
    });
    let mut cfg = cfg.clone();
    cfg.budget.iso_points = cfg.budget.iso_points.max(64);
    run_instances("algebraic-laws", instances, &cfg)
}

/// `Sep(𝔻_n; ¼, ¼) = n`, `Cov(𝔻_n; ½, ¼) = ⌈3n/4⌉` and the dissipation
/// criterion on singleton partitions.
pub fn experiment_dissipation(n_list: &[usize], cfg: &RunConfig) -> CheckReport {
    run_instances(
        "dissipation",
        vec![Instance::Dissipation {
            n_list: n_list.to_vec(),
        }],
        cfg,
    )
}

/// Exact sup-ball masses of `base_p^n` against the geometric bound.
pub fn experiment_product_ball_decay(base: &FiniteMmSpace, p: f64, r: f64, n_list: &[usize], cfg: &RunConfig) -> CheckReport {
    run_instances(
        "ball-decay",
        vec![Instance::BallDecay {
            base: base.clone(),
            p,
            r,
            n_list: n_list.to_vec(),
        }],
        cfg,
    )
}

/// Wedge of two copies of the `ℓ2` power of the `m`-cycle.
pub fn experiment_wedge_convergence(m: usize, n_list: &[usize], alpha: f64, cfg: &RunConfig) -> CheckReport {
    run_instances(
        "wedge",
        vec![Instance::Wedge {
            m,
            n_list: n_list.to_vec(),
            alpha,
            seed: cfg.seed,
        }],
        cfg,
    )
}

/// Atoms recovery from gapped families, decomposition round trips and the
/// atomic merge identity, with a fixed negative merge case first.
pub fn experiment_decomposition(cfg: &RunConfig) -> CheckReport {
    let count = cfg.count.unwrap_or(200);
    let mut instances = vec![Instance::Merge {
        a: WeightVector::a1(vec![0.5, 0.5]).expect("valid"),
        bs: vec![
            WeightVector::atoms(vec![0.5, 0.5]).expect("valid"),
            WeightVector::atoms(vec![1.0]).expect("valid"),
        ],
        differs_from_a: true,
    }];
    instances.extend(generate(cfg.seed, 3 * count, |i, rng| match i % 3 {
        0 => {
            let a = random_a1(rng, 4);
            let parts = (0..a.len())
                .map(|_| {
                    let n = rng.gen_range(1..=4);
                    let dim = rng.gen_range(1..=3);
                    let pts = random_points(rng, n, dim);
                    embedded_space(&pts, &dirichlet(rng, n))
                })
                .collect();
            Instance::AtomsRecovery {
                parts,
                a,
                levels: vec![8, 16],
                grid: vec![0.5, 0.1, 0.05],
            }
        }
        1 => {
            let a = random_a1(rng, 5);
            let parts: Vec<FiniteMmSpace> = (0..a.len()).map(|_| random_space(rng, 1, 6)).collect();
            let size: usize = parts.iter().map(|p| p.len()).sum();
            let mut perm: Vec<usize> = (0..size).collect();
            perm.shuffle(rng);
            Instance::RoundTrip { parts, a, perm }
        }
        _ => {
            let a = random_a1(rng, 3);
            let bs = (0..a.len())
                .map(|_| {
                    let mut e = random_a1(rng, 3).entries().to_vec();
                    e.sort_by(|x, y| y.total_cmp(x));
                    WeightVector::atoms(e).expect("sorted")
                })
                .collect();
            Instance::Merge {
                a,
                bs,
                differs_from_a: false,
            }
        }
    }));
    run_instances("decomposition", instances, cfg)
}

/// Runs a suite or experiment by name with default parameters.
pub fn run_named(name: &str, cfg: &RunConfig) -> Result<CheckReport> {
    Ok(match name {
        "prokhorov" => check_prokhorov(cfg),
        "metric-lemmas" => check_metric_lemmas(cfg),
        "sum-bounds" => check_sum_bounds(cfg),
        "invariant-lemmas" => check_invariant_lemmas(cfg),
        "algebraic-laws" => check_algebraic_laws(cfg),
        "dissipation" => experiment_dissipation(&[4, 8, 16], cfg),
        "ball-decay" => experiment_product_ball_decay(&FiniteMmSpace::two_point(1.0, 0.5)?, 2.0, 0.4, &[1, 2, 4], cfg),
        "wedge" => experiment_wedge_convergence(6, &[1, 2], 0.5, cfg),
        "decomposition" => experiment_decomposition(cfg),
        _ => {
            let known: Vec<&str> = CHECK_SUITES.iter().chain(EXPERIMENTS).copied().collect();
            return invalid_param(format!("unknown suite '{name}'; known: {}", known.join(", ")));
        }
    })
}
