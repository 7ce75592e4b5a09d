use std::path::PathBuf;
use std::process::{Command, Output};

fn mmpyr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmpyr"))
        .args(args)
        .env_remove("MMPYR_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mmpyr-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn compute_prints_value_and_flag() {
    let o = mmpyr(&["compute", "sep", "dissipation(8)", "--kappas", "0.25", "0.25"]);
    assert_eq!(stdout(&o), "8 EXACT");
    let o = mmpyr(&["compute", "box", "two_point(1, 0.5)", "two_point(1, 0.5)"]);
    assert_eq!(stdout(&o), "0 EXACT");
    let o = mmpyr(&["compute", "cov", "dissipation(8)", "--r", "0.5", "--kappa", "0.25"]);
    assert_eq!(stdout(&o), "6 EXACT");
    let o = mmpyr(&["compute", "obsdiam", "two_point(0.7, 0.5)", "--kappa", "0.3"]);
    assert_eq!(stdout(&o), "[0.7, 0.7] EXACT");
    let o = mmpyr(&["compute", "box", "point()", "two_point(0.1, 0.5)"]);
    assert_eq!(stdout(&o), "0.1 EXACT");
}

#[test]
fn budget_errors_name_the_flag() {
    let o = mmpyr(&["compute", "box", "dissipation(5)", "dissipation(5)", "--box-pairs", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--box-pairs"));
}

#[test]
fn parse_errors_report_line_and_column() {
    let o = mmpyr(&["compute", "diam", "two_point(1,\n  foo)"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("column 6"), "{err}");
}

#[test]
fn metric_lemmas_pass_with_seed_7() {
    let out = tmp("ml.csv");
    let o = mmpyr(&["check", "metric-lemmas", "--seed", "7", "--count", "200", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("check,seed,instance-id,lhs,rhs,slack,runtime-ms\n"));
}

#[test]
fn injected_fault_fails_and_replays() {
    let out = tmp("fault.csv");
    let replay = tmp("fault.json");
    let o = mmpyr(&[
        "check",
        "metric-lemmas",
        "--seed",
        "3",
        "--count",
        "10",
        "--fault-offset",
        "1",
        "--out",
        out.to_str().unwrap(),
        "--replay-out",
        replay.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(replay.exists());
    // The offset is stored with each failure, so replay reproduces it.
    let r = mmpyr(&["replay", replay.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stdout(&r).lines().all(|l| l.ends_with(": reproduced")));
}

#[test]
fn unknown_suite_is_an_error() {
    let o = mmpyr(&["check", "no-such-suite"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("metric-lemmas"));
}

#[test]
fn experiment_writes_csv() {
    let out = tmp("wedge.csv");
    let o = mmpyr(&["experiment", "wedge", "--m", "6", "--n", "1", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("wedge/separation,")));
}

#[test]
fn reruns_are_byte_identical() {
    let run = |name: &str| {
        let out = tmp(name);
        let o = mmpyr(&["check", "sum-bounds", "--seed", "11", "--count", "10", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn show_and_validate_round_trip() {
    let o = mmpyr(&["show", "lp_power(two_point(1, 0.5), 2, 2)"]);
    assert_eq!(o.status.code(), Some(0));
    let file = tmp("space.toml");
    std::fs::write(&file, stdout(&o)).unwrap();
    let v = mmpyr(&["validate", file.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).contains("4 points"));
    let iso = mmpyr(&["compute", "iso", file.to_str().unwrap(), "lp_power(two_point(1, 0.5), 2, 2)"]);
    assert_eq!(stdout(&iso), "true EXACT");
}
