use mmpyramid::harness::{self, Failure, RunConfig};

#[test]
fn failures_survive_json_and_replay_exactly() {
    let cfg = RunConfig {
        count: Some(12),
        fault_offset: 0.5,
        ..RunConfig::with_seed(21)
    };
    let report = harness::check_invariant_lemmas(&cfg);
    assert!(!report.failures.is_empty());
    let json = serde_json::to_string(&report.failures).unwrap();
    let back: Vec<Failure> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report.failures);
    assert!(back.iter().all(|f| harness::replay(f, &cfg.budget)));
}

#[test]
fn honest_runs_have_nothing_to_replay() {
    let report = harness::check_sum_bounds(&RunConfig {
        count: Some(12),
        ..RunConfig::with_seed(21)
    });
    assert!(report.passed(), "{}", report.summary());
}
