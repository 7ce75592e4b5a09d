//! Seeded check suites and experiments.
//!
//! Every suite expands `(seed, count)` into a list of [`Instance`]s, evaluates
//! them in parallel and merges the outcomes by instance index, so reruns
//! produce identical reports. Failures carry their serialized instance.

mod instances;
pub mod random;
mod suites;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::Result;

pub use instances::{spearman, Instance, Outcome, Relation, SLACK_TOL};
pub use suites::*;

pub const CSV_HEADER: &str = "check,seed,instance-id,lhs,rhs,slack,runtime-ms";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    /// Instance count; each suite has its own default.
    pub count: Option<usize>,
    pub budget: Budget,
    /// Fill the runtime column. Off by default so traces are reproducible.
    pub timings: bool,
    /// Subtracted from every asserted right-hand side; exercises the failure path.
    pub fault_offset: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            count: None,
            budget: Budget::default(),
            timings: false,
            fault_offset: 0.0,
        }
    }
}

impl RunConfig {
    pub fn with_seed(seed: u64) -> Self {
        RunConfig {
            seed,
            ..RunConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub check: String,
    pub seed: u64,
    pub instance: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub runtime_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub suite: String,
    pub seed: u64,
    pub instance_id: usize,
    pub check: String,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub message: String,
    pub fault_offset: f64,
    pub instance: Instance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub seed: u64,
    pub instances: usize,
    pub rows: Vec<Row>,
    pub failures: Vec<Failure>,
    /// Smallest slack per asserted relation.
    pub min_slack: BTreeMap<String, f64>,
    pub runtime_ms: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Rows in the trace schema, header first.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.check, r.seed, r.instance, r.lhs, r.rhs, r.slack, r.runtime_ms
            );
        }
        s
    }

    /// A one-line summary per relation plus the verdict.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: {} instances, {} failures, {}\n",
            self.name,
            self.instances,
            self.failures.len(),
            if self.passed() { "PASS" } else { "FAIL" }
        );
        for (k, v) in &self.min_slack {
            let _ = writeln!(s, "  min slack {k}: {v}");
        }
        for f in self.failures.iter().take(10) {
            let _ = writeln!(s, "  failed {} on instance {}: {}", f.check, f.instance_id, f.message);
        }
        s
    }
}

/// Evaluates `instances` and assembles the report.
pub fn run_instances(name: &str, instances: Vec<Instance>, cfg: &RunConfig) -> CheckReport {
    let start = Instant::now();
    let results: Vec<(Result<Vec<Outcome>>, f64)> = instances
        .par_iter()
        .map(|inst| {
            let t = Instant::now();
            let r = inst.evaluate(&cfg.budget);
            (r, t.elapsed().as_secs_f64() * 1e3)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut min_slack: BTreeMap<String, f64> = BTreeMap::new();
    for (i, ((res, ms), inst)) in results.into_iter().zip(&instances).enumerate() {
        let runtime_ms = if cfg.timings { ms } else { 0.0 };
        match res {
            Ok(outs) => {
                for mut o in outs {
                    if o.asserted() {
                        o.rhs -= cfg.fault_offset;
                    }
                    let check = format!("{name}/{}", o.check);
                    let slack = o.slack();
                    if o.asserted() {
                        let e = min_slack.entry(check.clone()).or_insert(f64::INFINITY);
                        *e = e.min(slack);
                    }
                    if !o.holds() {
                        failures.push(Failure {
                            suite: name.to_string(),
                            seed: cfg.seed,
                            instance_id: i,
                            check: check.clone(),
                            lhs: Some(o.lhs),
                            rhs: Some(o.rhs),
                            message: format!("{} {:?} {} violated", o.lhs, o.relation, o.rhs),
                            fault_offset: cfg.fault_offset,
                            instance: inst.clone(),
                        });
                    }
                    rows.push(Row {
                        check,
                        seed: cfg.seed,
                        instance: i,
                        lhs: o.lhs,
                        rhs: o.rhs,
                        slack,
                        runtime_ms,
                    });
                }
            }
            Err(e) => failures.push(Failure {
                suite: name.to_string(),
                seed: cfg.seed,
                instance_id: i,
                check: format!("{name}/error"),
                lhs: None,
                rhs: None,
                message: e.to_string(),
                fault_offset: cfg.fault_offset,
                instance: inst.clone(),
            }),
        }
    }
    CheckReport {
        name: name.to_string(),
        seed: cfg.seed,
        instances: instances.len(),
        rows,
        failures,
        min_slack,
        runtime_ms: if cfg.timings {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        },
    }
}

/// Re-evaluates a recorded failure; true when it fails again identically.
pub fn replay(f: &Failure, budget: &Budget) -> bool {
    match f.instance.evaluate(budget) {
        Ok(outs) => outs.into_iter().any(|mut o| {
            if o.asserted() {
                o.rhs -= f.fault_offset;
            }
            format!("{}/{}", f.suite, o.check) == f.check
                && !o.holds()
                && Some(o.lhs) == f.lhs
                && Some(o.rhs) == f.rhs
        }),
        Err(e) => f.lhs.is_none() && e.to_string() == f.message,
    }
}
