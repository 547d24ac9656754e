//! Exit codes and output formats of the `setupq` binary.

use std::process::{Command, Output};

fn setupq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_setupq")).args(args).env("SETUPQ_THREADS", "1").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const SMALL_SPEC: &str = r#"
format_version = 1
sweep = "beta"
values = [1.0, 5.0]
k = 4
rho = 0.5
policies = ["deterministic", "exponential"]
seed = 7
replications = 2
horizon = 3000.0
warmup = 100.0
"#;

#[test]
fn bounds_at_the_region_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let o =
        setupq(&["bounds", "--k", "250", "--rho", "0.4", "--mu", "1", "--beta", "100", "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("in_region"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.len(), 8);
    assert_eq!(row[7], "true");
    // 17 significant digits.
    assert_eq!(row[0], format!("{:.16e}", row[0].parse::<f64>().unwrap()));
}

#[test]
fn unstable_load_exits_two_naming_the_error() {
    let o = setupq(&["bounds", "--k", "250", "--rho", "1.0", "--beta", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("UnstableLoad"));
}

#[test]
fn zero_setup_keeps_erlang_c() {
    let o = setupq(&["bounds", "--k", "10", "--rho", "0.8", "--beta", "0"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let value = |name: &str| -> f64 {
        out.lines()
            .find(|l| l.split_whitespace().next() == Some(name))
            .unwrap()
            .split_whitespace()
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert_eq!(value("q_approx"), 0.0);
    assert_eq!(value("q_low_r"), 0.0);
    assert!(value("t_erlang_c") > 0.0);
}

#[test]
fn bad_flags_and_constants_exit_two() {
    assert_eq!(setupq(&["bounds", "--k", "10"]).status.code(), Some(2));
    assert_eq!(
        setupq(&["bounds", "--k", "10", "--rho", "0.5", "--beta", "1", "--const", "zz=1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        setupq(&["simulate", "--k", "3", "--rho", "0.5", "--beta", "1", "--buffer", "4"]).status.code(),
        Some(2)
    );
    assert_eq!(setupq(&["--threads", "0", "bounds", "--k", "3", "--rho", "0.5", "--beta", "1"]).status.code(), Some(2));
    assert_eq!(setupq(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(setupq(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_prints_estimates_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let o = setupq(&[
        "simulate",
        "--k",
        "5",
        "--rho",
        "0.5",
        "--beta",
        "2",
        "--horizon",
        "500",
        "--warmup",
        "50",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().any(|l| l.starts_with("mean_wait")));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().next(), Some("time,kind,n_jobs,n_busy,n_setup"));
    assert!(text.lines().count() > 100);
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.toml");
    std::fs::write(&spec, SMALL_SPEC).unwrap();
    let mut outs = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("o{i}.csv"));
        let o = setupq(&["sweep", spec.to_str().unwrap(), "-q", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        outs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    let text = String::from_utf8(outs.remove(0)).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(1).unwrap().starts_with("beta,1.0000000000000000e0,deterministic,"));
}

#[test]
fn sweep_failures_exit_two_and_leave_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    for text in [
        SMALL_SPEC.replace("values = [1.0, 5.0]", "values = []"),
        SMALL_SPEC.replace("format_version = 1", "format_version = 9"),
        SMALL_SPEC.replace("k = 4", "k = 4\nk = 5"),
        "not toml at all [".to_string(),
    ] {
        let spec = dir.path().join("s.toml");
        std::fs::write(&spec, text).unwrap();
        let o = setupq(&["sweep", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
        assert!(!out.exists());
    }
    let o = setupq(&["sweep", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn provision_rows() {
    let o = setupq(&["provision", "--target", "20", "--rho", "0.5", "--beta", "1000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let det = out.lines().find(|l| l.starts_with("det-approx,")).unwrap();
    let k: u64 = det.split(',').nth(1).unwrap().parse().unwrap();
    assert!((1500..=2600).contains(&k), "{k}");
    assert!(out.lines().any(|l| l.starts_with("low-r,,")));

    let o = setupq(&["provision", "--target", "2", "--rho", "0.5", "--beta", "10", "--model", "erlang-c"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);

    assert_eq!(setupq(&["provision", "--target", "0", "--rho", "0.5", "--beta", "10"]).status.code(), Some(2));
    assert_eq!(
        setupq(&["provision", "--target", "1", "--rho", "0.5", "--beta", "10", "--model", "x"]).status.code(),
        Some(2)
    );
}

#[test]
fn provision_verify_fills_simulation_columns() {
    let o = setupq(&[
        "provision",
        "--target",
        "2",
        "--rho",
        "0.5",
        "--beta",
        "2",
        "--model",
        "det-approx",
        "--verify",
        "--sim-warmups",
        "5",
        "--replications",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let row: Vec<String> = stdout(&o).lines().nth(1).unwrap().split(',').map(String::from).collect();
    assert_eq!(row.len(), 7);
    assert!(row[4].parse::<f64>().unwrap() > 0.0);
    assert!(row[6] == "true" || row[6] == "false");
}

#[test]
fn verify_single_claim_manifest() {
    let o = setupq(&["verify", "--claims", "accumulation_time", "--budget", "0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 2);
    assert!(out.lines().nth(1).unwrap().starts_with("accumulation_time,"));
}

#[test]
fn verify_names_failed_claims() {
    let o = setupq(&["verify", "--claims", "hitting_tails", "--budget", "0.2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("hitting_tail:t=1:upper"));
    assert_eq!(setupq(&["verify", "--claims", "nope"]).status.code(), Some(2));
    assert_eq!(setupq(&["verify", "--claims", "catalan", "--budget", "0"]).status.code(), Some(2));
}

#[test]
fn zero_slack_may_fail_but_never_errors() {
    let o = setupq(&["verify", "--claims", "first_long_epoch", "--budget", "0.01", "--slack", "0"]);
    assert!(matches!(o.status.code(), Some(0) | Some(1)), "{}", stderr(&o));
}
