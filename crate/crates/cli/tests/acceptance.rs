//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Budgets are sized for a single core; every check is seeded, so the output
//! is reproducible. A criterion listed in `KNOWN_FAILURES` still prints FAIL
//! but does not fail the process; see the README for why those claims cannot
//! hold as stated.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use setupq::analytic::{bounds_report, erlang_c_wait, welch_mm1_setup_wait, BoundConstants};
use setupq::estimate::{self, SimEstimate};
use setupq::model::{SetupPolicy, SystemParams};
use setupq::oracles::{
    check_catalan_sum, check_catalan_walk, check_hitting_tails, check_mminf_passage, check_mpolicy_bound, run_suite,
    Claim, OracleBudget, OracleVerdict, MPOLICY_BUFFERS, TAIL_LOAD,
};
use setupq::provision::{self, ProvisionModel, ProvisionOptions, SimBudget};
use setupq::sim::{run_with_rule, OnOffRule, SetupDuration, SimConfig};
use setupq_cli::sweep::{self, SweepRow, SweepSpec};

/// Criteria whose failure is expected and documented.
const KNOWN_FAILURES: [(u32, &str); 1] =
    [(10, "the stated hitting-tail upper bound is too small by a factor sqrt(2) for nu >= 20")];

/// Pinned regression values.
const SEPARATION_FACTOR_K100: f64 = 4.95;
const SEPARATION_TOLERANCE: f64 = 0.2;
const MPOLICY_REDUCTION_CEILING: f64 = 0.15;
const TIGHTNESS_CEILING: f64 = 13.0;
/// Relative error allowed between q_approx and simulation; 0.25 before the first run.
const APPROX_TOLERANCE: f64 = 0.10;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

type Check = fn() -> Result<Outcome, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn params(k: u64, rho: f64, beta: f64) -> Result<SystemParams<f64>, String> {
    SystemParams::new(k, rho, 1.0, beta).map_err(err)
}

fn simulate(
    p: &SystemParams<f64>,
    policy: SetupPolicy,
    horizon: f64,
    warmup: f64,
    reps: usize,
    seed: u64,
) -> Result<estimate::EstimatePair, String> {
    estimate::estimate(p, &policy, &SimConfig::new(horizon, warmup, seed), reps).map_err(err)
}

fn within_sigmas(e: &SimEstimate, reference: f64, sigmas: f64) -> bool {
    (e.mean - reference).abs() <= sigmas * e.std_error()
}

fn recipe(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes").join(name)
}

fn c1_single_server() -> Result<Outcome, String> {
    let p = SystemParams::from_arrival_rate(1, 0.5, 1.0, 10.0).map_err(err)?;
    let exact = welch_mm1_setup_wait(0.5, 1.0, 10.0).map_err(err)?;
    let w = simulate(&p, SetupPolicy::BASE, 2e6, 200.0, 8, 1)?.wait;
    let rel = (w.mean - exact).abs() / exact;
    Ok(outcome(
        within_sigmas(&w, exact, 3.0) && rel <= 0.02,
        format!("sim wait {:.4} +- {:.4} vs {exact:.4}, relative error {rel:.4}", w.mean, w.ci_half_width),
    ))
}

fn c2_no_setup() -> Result<Outcome, String> {
    let p = params(10, 0.8, 0.0)?;
    let exact = erlang_c_wait(10, 0.8, 1.0).map_err(err)?;
    let w = simulate(&p, SetupPolicy::NoSetup, 2e6, 500.0, 8, 2)?.wait;
    Ok(outcome(
        within_sigmas(&w, exact, 3.0),
        format!("sim wait {:.5} +- {:.5} vs Erlang-C {exact:.5}", w.mean, w.ci_half_width),
    ))
}

fn c3_degeneracy() -> Result<Outcome, String> {
    let p = params(10, 0.8, 1e-6)?;
    let exact = erlang_c_wait(10, 0.8, 1.0).map_err(err)?;
    let w = simulate(&p, SetupPolicy::BASE, 2e6, 500.0, 8, 3)?.wait;
    Ok(outcome(
        within_sigmas(&w, exact, 3.0),
        format!("sim wait {:.5} +- {:.5} vs Erlang-C {exact:.5}", w.mean, w.ci_half_width),
    ))
}

fn boundary_queue_length() -> Result<SimEstimate, String> {
    let p = params(250, 0.4, 100.0)?;
    Ok(simulate(&p, SetupPolicy::BASE, 2e5, 1e3, 8, 4)?.queue_length)
}

fn c4_sandwich() -> Result<Outcome, String> {
    let p = params(250, 0.4, 100.0)?;
    let r = bounds_report(&p, &BoundConstants::default());
    let q = boundary_queue_length()?;
    let rel_ci = q.ci_half_width / q.mean;
    Ok(outcome(
        r.q_lower <= q.mean && q.mean <= r.q_upper && rel_ci <= 0.05,
        format!("{:.2} <= E[Q] {:.2} (CI {:.2}%) <= {:.2}", r.q_lower, q.mean, 100.0 * rel_ci, r.q_upper),
    ))
}

fn c5_approximation() -> Result<Outcome, String> {
    let c = BoundConstants::default();
    let mut parts = Vec::new();
    let mut ok = true;
    let points = [
        (250, 0.4, boundary_queue_length()?),
        (400, 0.5, {
            let p = params(400, 0.5, 100.0)?;
            simulate(&p, SetupPolicy::BASE, 1e5, 1e3, 4, 5)?.queue_length
        }),
    ];
    for (k, rho, q) in points {
        let approx = bounds_report(&params(k, rho, 100.0)?, &c).q_approx;
        let rel = (approx - q.mean).abs() / q.mean;
        ok &= rel <= APPROX_TOLERANCE;
        parts.push(format!("k={k}: q_approx {approx:.1} vs sim {:.1} ({:.1}%)", q.mean, 100.0 * rel));
    }
    Ok(outcome(ok, parts.join("; ")))
}

fn c6_low_r() -> Result<Outcome, String> {
    let p = params(5, 0.1, 200.0)?;
    let r = bounds_report(&p, &BoundConstants::default());
    let q = simulate(&p, SetupPolicy::BASE, 2e6, 2e3, 8, 6)?.queue_length;
    let rel = (r.q_low_r - q.mean).abs() / q.mean;
    let closer = (r.q_low_r - q.mean).abs() < (r.q_approx - q.mean).abs();
    Ok(outcome(
        rel <= 0.3 && closer,
        format!("sim {:.3}, q_low_r {:.3} ({:.1}%), q_approx {:.3}", q.mean, r.q_low_r, 100.0 * rel, r.q_approx),
    ))
}

fn wait_at(rows: &[SweepRow], k: u64, label: &str) -> Option<f64> {
    rows.iter().find(|r| r.point.params.k() == k && r.point.policy.label() == label).map(|r| r.mean_wait)
}

fn c7_separation() -> Result<Outcome, String> {
    let spec = SweepSpec::from_file(&recipe("servers_desk.toml")).map_err(err)?;
    let rows = sweep::run(&spec, |_| {}).map_err(err)?;
    let get = |k, label| wait_at(&rows, k, label).ok_or(format!("no {label} row at k={k}"));
    let factor = get(100, "deterministic")? / get(100, "exponential")?;
    let pinned = (factor / SEPARATION_FACTOR_K100 - 1.0).abs() <= SEPARATION_TOLERANCE;
    let mut ordered = true;
    for &k in &[10u64, 50, 100] {
        ordered &= get(k, "deterministic")? > get(k, "exponential")? && get(k, "exponential")? > get(k, "no-setup")?;
    }
    Ok(outcome(
        factor >= 2.0 && pinned && ordered,
        format!(
            "det/exp wait at k=100 is {factor:.3} (pinned {SEPARATION_FACTOR_K100} +- {:.0}%); det > exp > none for k >= 10: {ordered}",
            100.0 * SEPARATION_TOLERANCE
        ),
    ))
}

fn c8_provisioning() -> Result<Outcome, String> {
    let det = provision::min_servers_for_wait(
        20.0,
        0.5,
        1.0,
        1000.0,
        ProvisionModel::DetApprox,
        &ProvisionOptions::default(),
    )
    .map_err(err)?;
    let coarse = SimBudget { horizon_warmups: 5.0, replications: 4, seed: 8 };
    let fine = SimBudget { horizon_warmups: 20.0, replications: 4, seed: 8 };
    let (k_exp, est) =
        provision::min_servers_exponential_sim(20.0, 0.5, 1.0, 1000.0, 100_000, &coarse, &fine).map_err(err)?;
    Ok(outcome(
        (1500..=2600).contains(&det.k) && (30..=100).contains(&k_exp),
        format!("det-approx k={}, exponential-sim k={k_exp} (wait {:.2} +- {:.2})", det.k, est.mean, est.ci_half_width),
    ))
}

fn summarize_verdicts(verdicts: &[OracleVerdict]) -> String {
    verdicts
        .iter()
        .map(|v| {
            let mark = if v.passed { "ok" } else { "FAIL" };
            format!("{} {:.4} +- {:.4} vs {:.4} {mark}", v.claim_id, v.estimate, v.ci_half_width, v.threshold())
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn c9_renewal_claims() -> Result<Outcome, String> {
    let claims = [Claim::AccumulationTime, Claim::FirstLongEpoch, Claim::Nta];
    let verdicts: Vec<OracleVerdict> = run_suite(&claims, 9, &OracleBudget::default(), None)
        .map_err(err)?
        .into_iter()
        .filter(|v| v.claim_id != "nta_second_moment")
        .collect();
    Ok(outcome(verdicts.iter().all(|v| v.passed), summarize_verdicts(&verdicts)))
}

fn c10_analytic_claims() -> Result<Outcome, String> {
    let c = BoundConstants::default();
    let mminf: Vec<OracleVerdict> = check_mminf_passage(&[100, 400, 10_000], 1.0).map_err(err)?;
    let catalan = check_catalan_sum(&[0.1, 0.3, 0.45, 0.5], 1_000_000);
    let walk = [check_catalan_walk(0.4, 20, 200_000, 10), check_catalan_walk(0.5, 20, 200_000, 11)];
    let tails: Vec<OracleVerdict> =
        check_hitting_tails(TAIL_LOAD, 1.0, &[0.05, 0.2, 1.0, 5.0], 1_000_000, 10, &c).map_err(err)?;
    let all_pass = |vs: &[OracleVerdict]| vs.iter().filter(|v| v.asserted).all(|v| v.passed);
    let failed_tails: Vec<&str> = tails.iter().filter(|v| v.failed_assertion()).map(|v| v.claim_id.as_str()).collect();
    Ok(outcome(
        all_pass(&mminf) && all_pass(&catalan) && all_pass(&walk) && failed_tails.is_empty(),
        format!(
            "mminf passage: {}; catalan sums: {}; catalan walks: {}; hitting-tail sandwich: {}",
            if all_pass(&mminf) { "pass" } else { "fail" },
            if all_pass(&catalan) { "pass" } else { "fail" },
            if all_pass(&walk) { "pass" } else { "fail" },
            if failed_tails.is_empty() {
                "pass".to_string()
            } else {
                format!("violated at {}", failed_tails.join(", "))
            },
        ),
    ))
}

fn c11_mpolicy() -> Result<Outcome, String> {
    let p = params(250, 0.4, 100.0)?;
    let cfg = SimConfig::new(1e5, 1e3, 11);
    let (verdicts, curve) =
        check_mpolicy_bound(&p, &MPOLICY_BUFFERS, &cfg, 4, &BoundConstants::default()).map_err(err)?;
    let bounds_hold = verdicts.iter().all(|v| v.passed);

    let short = SimConfig::new(5e3, 0.0, 11).with_trace(true);
    let setup = SetupDuration::Deterministic(100.0);
    let base = run_with_rule(&p, setup, OnOffRule::Base, &short).map_err(err)?;
    let buffered = run_with_rule(&p, setup, OnOffRule::Buffered(0), &short).map_err(err)?;
    let same_path = base.trace.is_some() && base.trace == buffered.trace;

    let wait = |m| curve.iter().find(|pt| pt.m == m).map(|pt| pt.wait.mean).ok_or(format!("no point at m={m}"));
    let reduction = 1.0 - wait(5)? / wait(0)?;
    Ok(outcome(
        bounds_hold && same_path && reduction <= MPOLICY_REDUCTION_CEILING,
        format!(
            "E[Q] - CI >= bound for m in {MPOLICY_BUFFERS:?}: {bounds_hold}; m=0 path equals base: {same_path}; \
             wait reduction m=0 to m=5 {:.1}% (ceiling {:.0}%)",
            100.0 * reduction,
            100.0 * MPOLICY_REDUCTION_CEILING
        ),
    ))
}

fn c12_tightness() -> Result<Outcome, String> {
    let c = BoundConstants::default();
    let mut worst = 0.0f64;
    let mut points = 0;
    for k in [150u64, 250, 1000] {
        for rho in [0.3, 0.6] {
            for beta in [100.0, 1000.0] {
                let p = params(k, rho, beta)?;
                if p.offered_load() < 100.0 {
                    continue;
                }
                let ratio = bounds_report(&p, &c).tightness_ratio;
                if !ratio.is_finite() {
                    return Ok(outcome(false, format!("ratio not finite at k={k}, rho={rho}, beta={beta}")));
                }
                worst = worst.max(ratio);
                points += 1;
            }
        }
    }
    Ok(outcome(
        worst <= TIGHTNESS_CEILING,
        format!("max q_upper/q_lower {worst:.3} over {points} points with R >= 100 (ceiling {TIGHTNESS_CEILING})"),
    ))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_setupq"))
        .args(args)
        .env("SETUPQ_THREADS", "1")
        .stderr(std::process::Stdio::null())
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(err)?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("setupq {} exited with {status}", args.join(" ")))
    }
}

fn c13_determinism() -> Result<Outcome, String> {
    let dir = tempfile::tempdir().map_err(err)?;
    let spec = recipe("servers_desk.toml");
    let spec = spec.to_str().ok_or("non-UTF-8 recipe path")?;
    let mut same = Vec::new();
    for name in ["sweep", "bounds", "verify"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("{name}-{run}.csv"));
            let out = path.to_str().ok_or("non-UTF-8 temp path")?;
            match name {
                "sweep" => run_cli(&["sweep", spec, "--out", out])?,
                "bounds" => run_cli(&["bounds", "--k", "250", "--rho", "0.4", "--beta", "100", "--csv", out])?,
                _ => run_cli(&["verify", "--claims", "catalan,accumulation_time", "--budget", "0.1", "--out", out])?,
            }
            outputs.push(std::fs::read(&path).map_err(err)?);
        }
        same.push((name, !outputs[0].is_empty() && outputs[0] == outputs[1]));
    }
    Ok(outcome(
        same.iter().all(|(_, s)| *s),
        same.iter()
            .map(|(n, s)| format!("{n}: {}", if *s { "identical" } else { "differs" }))
            .collect::<Vec<_>>()
            .join(", "),
    ))
}

fn main() {
    let checks: [(u32, &str, Check); 13] = [
        (1, "single-server exact wait", c1_single_server),
        (2, "no-setup baseline", c2_no_setup),
        (3, "vanishing setup", c3_degeneracy),
        (4, "sandwich", c4_sandwich),
        (5, "approximation accuracy", c5_approximation),
        (6, "low-R regime", c6_low_r),
        (7, "model separation", c7_separation),
        (8, "provisioning", c8_provisioning),
        (9, "renewal-cycle claims", c9_renewal_claims),
        (10, "analytic claim checks", c10_analytic_claims),
        (11, "m-policy", c11_mpolicy),
        (12, "tightness", c12_tightness),
        (13, "determinism", c13_determinism),
    ];
    let filter: Option<Vec<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut unexpected = 0;
    for (id, name, check) in checks {
        if filter.as_ref().is_some_and(|f| !f.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let result = check().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == id).map(|(_, why)| *why);
        let verdict = if result.passed { "PASS" } else { "FAIL" };
        let suffix = match (result.passed, known) {
            (false, Some(why)) => format!(" [known failure: {why}]"),
            _ => String::new(),
        };
        println!(
            "criterion {id:>2} {verdict} ({name}, {:.1}s): {}{suffix}",
            start.elapsed().as_secs_f64(),
            result.detail
        );
        if !result.passed && known.is_none() {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
