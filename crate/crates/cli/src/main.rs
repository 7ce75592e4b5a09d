//! `mmpyr`: compute invariants and distances of finite mm-spaces and run the
//! seeded check suites.
//!
//! Exit codes: 0 pass, 1 check failure, 2 usage or input error.

mod error;
mod expr;
mod spacefile;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mmpyramid::distances::box_distance_exact;
use mmpyramid::harness::{self, CheckReport, Failure, RunConfig, CHECK_SUITES, CSV_HEADER, EXPERIMENTS};
use mmpyramid::invariants::{covering_number, eps_supporting_net, obs_diameter, partial_diameter_space, separation_distance, ObsOptions};
use mmpyramid::maps::{lipschitz_dominates, mm_isomorphic};
use mmpyramid::measures::{prokhorov_flow, total_variation, MeasureOnSpace};
use mmpyramid::pyramids::{atoms_limit_of_scaling, decompose_extended, rho_empirical, rho_upper, PyramidApprox, SampleOptions};
use mmpyramid::{Budget, FiniteMmSpace, Flag, Metric};

use error::CliError;
use expr::Space;
use spacefile::load_space;

#[derive(Parser)]
#[command(name = "mmpyr", version, about = "Finite mm-spaces, box distances, observable invariants and pyramids")]
struct Cli {
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Size limits for the exact solvers. Exceeding one is reported as an error
/// naming the flag that raises it.
#[derive(Args)]
struct BudgetArgs {
    /// Largest product or power (points).
    #[arg(long, global = true)]
    max_points: Option<usize>,
    /// Largest |X|·|Y| for the exact box distance; cost grows exponentially.
    #[arg(long, global = true)]
    box_pairs: Option<usize>,
    /// Largest space for isomorphism tests.
    #[arg(long, global = true)]
    iso_points: Option<usize>,
    /// Largest domain for domination and ε-map searches; cost is |Y|^|X| in the worst case.
    #[arg(long, global = true)]
    dominance_points: Option<usize>,
    /// Largest support for the subset-scan Prokhorov oracle (2^n subsets).
    #[arg(long, global = true)]
    subset_scan_points: Option<usize>,
    /// Largest support for the exact partial diameter.
    #[arg(long, global = true)]
    pdiam_points: Option<usize>,
    /// Largest space for the exact separation distance.
    #[arg(long, global = true)]
    sep_points: Option<usize>,
    /// Largest space for the exact covering number; larger spaces get a greedy UPPER bound.
    #[arg(long, global = true)]
    cov_points: Option<usize>,
    /// Node limit for backtracking searches.
    #[arg(long, global = true)]
    search_nodes: Option<u64>,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        let mut b = Budget::default();
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { b.$f = v; } )* };
        }
        set!(max_points, box_pairs, iso_points, dominance_points, subset_scan_points, pdiam_points, sep_points, cov_points, search_nodes);
        b
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    /// Box distance between two spaces.
    Box,
    /// Sep(X; κ_0, ..., κ_N) with --kappas.
    Sep,
    /// Cov(X; r, κ) with --r and --kappa.
    Cov,
    /// Size of an ε-supporting net with --eps.
    Net,
    /// ObsDiam(X; κ) with --kappa.
    Obsdiam,
    /// diam(X; α) with --alpha.
    Pdiam,
    /// Diameter.
    Diam,
    /// Whether two spaces are mm-isomorphic.
    Iso,
    /// Whether the second space is dominated by the first.
    Dominates,
    /// Prokhorov distance of --mu and --nu on one space.
    Prokhorov,
    /// Total variation distance of --mu and --nu on one space.
    Tv,
    /// Parts and weights of an extended space.
    Decompose,
    /// Upper bound on ρ between the pyramids of two spaces.
    RhoUpper,
    /// Sampled estimate of ρ between the pyramids of two spaces.
    RhoEmpirical,
    /// Atom weights of the scaling limit of the pyramid generated by the given spaces.
    AtomsLimit,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute a quantity; spaces are file paths or expressions.
    Compute {
        quantity: Quantity,
        #[arg(required = true)]
        spaces: Vec<String>,
        #[arg(long, default_value_t = 0.1)]
        kappa: f64,
        #[arg(long, num_args = 1.., default_values_t = [0.25, 0.25])]
        kappas: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, num_args = 1..)]
        mu: Vec<f64>,
        #[arg(long, num_args = 1..)]
        nu: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        n_max: usize,
        /// Scales for the atoms limit, decreasing.
        #[arg(long, num_args = 2.., default_values_t = [0.5, 0.1, 0.05])]
        t_grid: Vec<f64>,
        #[arg(long, env = "MMPYR_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Run a check suite, or `all`.
    Check {
        suite: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run an experiment and emit its per-n rows.
    Experiment {
        name: String,
        #[arg(long, default_value_t = 6)]
        m: usize,
        #[arg(long, num_args = 1..)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.4)]
        r: f64,
        /// Base space for ball-decay.
        #[arg(long, default_value = "two_point(1, 0.5)")]
        base: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check that space files parse and describe valid spaces.
    Validate {
        #[arg(required = true)]
        files: Vec<String>,
    },
    /// Print a space in explicit file form.
    Show { space: String },
    /// Re-run the failures recorded in a replay file.
    Replay { file: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, env = "MMPYR_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    count: Option<usize>,
    /// CSV output path; the CSV goes to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write failing instances; defaults next to --out.
    #[arg(long)]
    replay_out: Option<PathBuf>,
    /// Record runtimes in the CSV. Timed traces are not reproducible.
    #[arg(long)]
    timings: bool,
    #[arg(long, hide = true, default_value_t = 0.0)]
    fault_offset: f64,
}

impl RunArgs {
    fn config(&self, budget: Budget) -> RunConfig {
        RunConfig {
            seed: self.seed,
            count: self.count,
            budget,
            timings: self.timings,
            fault_offset: self.fault_offset,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let budget = cli.budget.budget();
    match run(cli.cmd, budget) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(flag) = e.budget_hint() {
                eprintln!("hint: raise the limit with {flag}");
            }
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Cmd, budget: Budget) -> Result<bool, CliError> {
    match cmd {
        Cmd::Compute {
            quantity,
            spaces,
            kappa,
            kappas,
            r,
            alpha,
            eps,
            mu,
            nu,
            n_max,
            t_grid,
            seed,
        } => {
            let loaded: Vec<Space> = spaces.iter().map(|s| load_space(s, &budget)).collect::<Result<_, _>>()?;
            let q = Query {
                kappa,
                kappas,
                r,
                alpha,
                eps,
                mu,
                nu,
                n_max,
                t_grid,
                seed,
            };
            println!("{}", compute(quantity, &loaded, &q, &budget)?);
            Ok(true)
        }
        Cmd::Check { suite, run } => {
            let cfg = run.config(budget);
            let names: Vec<&str> = if suite == "all" {
                CHECK_SUITES.iter().chain(EXPERIMENTS).copied().collect()
            } else {
                vec![suite.as_str()]
            };
            let mut reports = Vec::new();
            for name in names {
                reports.push(harness::run_named(name, &cfg)?);
            }
            emit(&reports, &run)
        }
        Cmd::Experiment {
            name,
            m,
            n,
            alpha,
            p,
            r,
            base,
            run,
        } => {
            let cfg = run.config(budget.clone());
            let pick = |d: &[usize]| if n.is_empty() { d.to_vec() } else { n.clone() };
            let report = match name.as_str() {
                "wedge" => harness::experiment_wedge_convergence(m, &pick(&[1, 2]), alpha, &cfg),
                "ball-decay" => {
                    let b = finite(load_space(&base, &budget)?)?;
                    harness::experiment_product_ball_decay(&b, p, r, &pick(&[1, 2, 4]), &cfg)
                }
                "dissipation" => harness::experiment_dissipation(&pick(&[4, 8, 16]), &cfg),
                "decomposition" => harness::experiment_decomposition(&cfg),
                _ => {
                    return Err(CliError::Usage(format!(
                        "unknown experiment '{name}'; known: {}",
                        EXPERIMENTS.join(", ")
                    )))
                }
            };
            emit(&[report], &run)
        }
        Cmd::Validate { files } => {
            let mut ok = true;
            for f in &files {
                match load_space(f, &budget) {
                    Ok(s) => println!("{f}: ok ({} points)", s.len()),
                    Err(e) => {
                        println!("{f}: {e}");
                        ok = false;
                    }
                }
            }
            Ok(ok)
        }
        Cmd::Show { space } => {
            let s = load_space(&space, &budget)?;
            let text = toml::to_string(&s.to_file()).map_err(|e| CliError::Usage(e.to_string()))?;
            print!("{text}");
            Ok(true)
        }
        Cmd::Replay { file } => {
            let text = std::fs::read_to_string(&file).map_err(|e| file_err(&file, e))?;
            let failures: Vec<Failure> = serde_json::from_str(&text).map_err(|e| file_err(&file, e))?;
            let mut clean = true;
            for f in &failures {
                let again = harness::replay(f, &budget);
                println!(
                    "{} instance {}: {}",
                    f.check,
                    f.instance_id,
                    if again { "reproduced" } else { "not reproduced" }
                );
                clean &= !again;
            }
            Ok(clean)
        }
    }
}

fn file_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::File {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

/// Writes CSV and summaries; writes a replay file when anything failed.
fn emit(reports: &[CheckReport], run: &RunArgs) -> Result<bool, CliError> {
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in reports {
        csv.push_str(r.to_csv().split_once('\n').map_or("", |(_, rows)| rows));
    }
    match &run.out {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| file_err(path, e))?;
            for r in reports {
                print!("{}", r.summary());
            }
        }
        None => {
            print!("{csv}");
            for r in reports {
                eprint!("{}", r.summary());
            }
        }
    }
    let failures: Vec<&Failure> = reports.iter().flat_map(|r| &r.failures).collect();
    if failures.is_empty() {
        return Ok(true);
    }
    let path = run.replay_out.clone().unwrap_or_else(|| match &run.out {
        Some(p) => {
            let mut s = p.clone().into_os_string();
            s.push(".replay.json");
            PathBuf::from(s)
        }
        None => PathBuf::from("mmpyr-replay.json"),
    });
    let json = serde_json::to_string_pretty(&failures).map_err(|e| file_err(&path, e))?;
    std::fs::write(&path, json).map_err(|e| file_err(&path, e))?;
    eprintln!("{} failures; replay file written to {}", failures.len(), path.display());
    Ok(false)
}

struct Query {
    kappa: f64,
    kappas: Vec<f64>,
    r: f64,
    alpha: f64,
    eps: f64,
    mu: Vec<f64>,
    nu: Vec<f64>,
    n_max: usize,
    t_grid: Vec<f64>,
    seed: u64,
}

fn finite(s: Space) -> Result<FiniteMmSpace, CliError> {
    match s {
        Space::Finite(x) => Ok(x),
        Space::Extended(_) => Err(CliError::Usage("this quantity needs finite distances".into())),
    }
}

fn arity(spaces: &[Space], n: usize) -> Result<(), CliError> {
    if spaces.len() != n {
        return Err(CliError::Usage(format!("expected {n} spaces, got {}", spaces.len())));
    }
    Ok(())
}

fn compute(quantity: Quantity, spaces: &[Space], q: &Query, b: &Budget) -> Result<String, CliError> {
    let one = |i: usize| finite(spaces[i].clone());
    let exact = |v: f64| format!("{v} {}", Flag::Exact);
    Ok(match quantity {
        Quantity::Box => {
            arity(spaces, 2)?;
            exact(box_distance_exact(&one(0)?, &one(1)?, b)?.value)
        }
        Quantity::Sep => {
            arity(spaces, 1)?;
            exact(separation_distance(&one(0)?, &q.kappas, b)?.value)
        }
        Quantity::Cov => {
            arity(spaces, 1)?;
            let c = covering_number(&one(0)?, q.r, q.kappa, b)?;
            format!("{} {}", c.count, c.flag)
        }
        Quantity::Net => {
            arity(spaces, 1)?;
            let c = eps_supporting_net(&one(0)?, q.eps, b)?;
            format!("{} {}", c.count, c.flag)
        }
        Quantity::Obsdiam => {
            arity(spaces, 1)?;
            let o = obs_diameter(&one(0)?, q.kappa, &ObsOptions::default(), b)?;
            if o.is_tight() {
                format!("{o} {}", Flag::Exact)
            } else {
                format!("{} {}, {} {}", o.lower, Flag::Lower, o.upper, Flag::Upper)
            }
        }
        Quantity::Pdiam => {
            arity(spaces, 1)?;
            exact(partial_diameter_space(&one(0)?, q.alpha, b)?)
        }
        Quantity::Diam => {
            arity(spaces, 1)?;
            exact(one(0)?.diameter())
        }
        Quantity::Iso => {
            arity(spaces, 2)?;
            let found = match (&spaces[0], &spaces[1]) {
                (Space::Finite(x), Space::Finite(y)) => mm_isomorphic(x, y, b)?,
                (x, y) => mm_isomorphic(&ext(x), &ext(y), b)?,
            };
            format!("{} {}", found.is_some(), Flag::Exact)
        }
        Quantity::Dominates => {
            arity(spaces, 2)?;
            let found = lipschitz_dominates(&one(0)?, &one(1)?, b)?;
            format!("{} {}", found.is_some(), Flag::Exact)
        }
        Quantity::Prokhorov | Quantity::Tv => {
            arity(spaces, 1)?;
            let x = one(0)?;
            let mu = MeasureOnSpace::new(&x, q.mu.clone())?;
            let nu = MeasureOnSpace::new(&x, q.nu.clone())?;
            let v = match quantity {
                Quantity::Prokhorov => prokhorov_flow(&mu, &nu)?,
                _ => total_variation(&mu, &nu)?,
            };
            exact(v)
        }
        Quantity::Decompose => {
            arity(spaces, 1)?;
            let d = decompose_extended(&ext(&spaces[0]))?;
            let flag = if d.canonical { Flag::Exact } else { Flag::Estimate };
            let mut s = format!("{} parts {flag}", d.parts.len());
            for (k, p) in d.parts.iter().enumerate() {
                s.push_str(&format!("\npart {k}: weight {}, {} points, labels {:?}", d.weights.get(k), p.len(), p.labels()));
            }
            s
        }
        Quantity::RhoUpper => {
            arity(spaces, 2)?;
            let r = rho_upper(&PyramidApprox::of_space(one(0)?), &PyramidApprox::of_space(one(1)?), b)?;
            format!("{} {} ({})", r.value, Flag::Upper, r.rule)
        }
        Quantity::RhoEmpirical => {
            arity(spaces, 2)?;
            let opts = SampleOptions {
                seed: q.seed,
                ..SampleOptions::default()
            };
            let r = rho_empirical(&PyramidApprox::of_space(one(0)?), &PyramidApprox::of_space(one(1)?), q.n_max, &opts)?;
            format!("{} {}", r.value, r.flag)
        }
        Quantity::AtomsLimit => {
            let gens = spaces.iter().cloned().map(finite).collect::<Result<Vec<_>, _>>()?;
            let p = PyramidApprox::generators(gens, true)?;
            let a = atoms_limit_of_scaling(&p, &q.t_grid, 1e-9)?;
            format!("{:?} {}", a.entries(), Flag::Estimate)
        }
    })
}

fn ext(s: &Space) -> mmpyramid::ExtendedFiniteMmSpace {
    match s {
        Space::Finite(x) => x.to_extended(),
        Space::Extended(x) => x.clone(),
    }
}
