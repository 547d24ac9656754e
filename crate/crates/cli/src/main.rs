use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use setupq::estimate;
use setupq::model::{SetupPolicy, SystemParams};
use setupq::oracles::{manifest_csv, run_suite, Claim, OracleBudget};
use setupq::provision::{self, ProvisionModel, ProvisionOptions, ProvisionRow, SimBudget};
use setupq::sim::{default_warmup, trace_to_csv, SimConfig};
use setupq_cli::output::{opt_real, real, write_atomic};
use setupq_cli::{bounds, sweep, CliError};

#[derive(Parser)]
#[command(name = "setupq", version, about = "Multi-server queues with setup times: bounds, simulation, provisioning")]
struct Cli {
    /// Worker threads for simulations and Monte-Carlo checks (default: all cores).
    #[arg(long, global = true, env = "SETUPQ_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the analytic predictions for one parameter point.
    Bounds(BoundsArgs),
    /// Simulate one parameter point with independent replications.
    Simulate(SimulateArgs),
    /// Run a sweep spec and write its CSV.
    Sweep(SweepArgs),
    /// Smallest server count meeting a mean-wait target.
    Provision(ProvisionArgs),
    /// Run the claim verification suite and write its manifest.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    k: u64,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long)]
    beta: f64,
}

impl PointArgs {
    fn params(&self) -> Result<SystemParams<f64>, CliError> {
        Ok(SystemParams::new(self.k, self.rho, self.mu, self.beta)?)
    }
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Override a constant, e.g. `--const f1=2.5`. Repeatable.
    #[arg(long = "const", value_name = "NAME=VALUE")]
    constants: Vec<String>,
    /// Also write the one-row CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Deterministic,
    Exponential,
    NoSetup,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, value_enum, default_value = "deterministic")]
    policy: PolicyArg,
    /// Extra servers kept on by the deterministic policy.
    #[arg(long, default_value_t = 0)]
    buffer: u64,
    /// Mean of the exponential setup (default: beta).
    #[arg(long)]
    setup_mean: Option<f64>,
    /// Simulated time per replication (default: 21 warmups).
    #[arg(long)]
    horizon: Option<f64>,
    /// Discarded initial period (default: max(10 beta, 100 / (mu (1 - rho)))).
    #[arg(long)]
    warmup: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    replications: usize,
    /// Write the event trace of replication 0 as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML sweep spec.
    spec: PathBuf,
    /// Output CSV (default: stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Suppress per-row progress on stderr.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct ProvisionArgs {
    /// Target mean wait, in units of 1/mu.
    #[arg(long)]
    target: f64,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long)]
    beta: f64,
    /// det-approx, low-r, upper-bound or erlang-c (default: all).
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = provision::DEFAULT_K_MAX)]
    k_max: u64,
    /// Check each analytic answer by simulating k and k - 1 with deterministic setup.
    #[arg(long)]
    verify: bool,
    /// Add a row found by simulating exponential setup at each probed k.
    #[arg(long)]
    exp_sim: bool,
    /// Horizon of simulations, in warmups.
    #[arg(long, default_value_t = 20.0)]
    sim_warmups: f64,
    /// Horizon of the exponential search probes, in warmups.
    #[arg(long, default_value_t = 5.0)]
    probe_warmups: f64,
    #[arg(long, default_value_t = 4)]
    replications: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated claims (default: all).
    #[arg(long, value_delimiter = ',')]
    claims: Vec<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Multiplier on every Monte-Carlo sample size.
    #[arg(long, default_value_t = 1.0)]
    budget: f64,
    /// Override the relative slack of the renewal-cycle claims.
    #[arg(long)]
    slack: Option<f64>,
    /// Manifest CSV (default: stdout).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => Ok(write_atomic(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_bounds(a: &BoundsArgs) -> Result<(), CliError> {
    let params = a.point.params()?;
    let c = bounds::constants_with_overrides(&a.constants)?;
    let report = bounds::report(&params, &c);
    print!("{}", bounds::table(&params, &report));
    if let Some(path) = &a.csv {
        write_atomic(path, &bounds::csv(&report))?;
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let params = a.point.params()?;
    let policy = match a.policy {
        PolicyArg::Deterministic => SetupPolicy::DeterministicSetup { buffer: a.buffer },
        PolicyArg::Exponential => SetupPolicy::ExponentialSetup { mean_setup: a.setup_mean.unwrap_or(params.beta()) },
        PolicyArg::NoSetup => SetupPolicy::NoSetup,
    };
    policy.check(&params)?;
    let warmup = a.warmup.unwrap_or_else(|| default_warmup(&params));
    let cfg = SimConfig::new(a.horizon.unwrap_or(21.0 * warmup), warmup, a.seed);
    cfg.validate()?;
    let est = estimate::estimate(&params, &policy, &cfg, a.replications)?;
    if let Some(path) = &a.trace {
        let rep = setupq::sim::run_replication(&params, &policy, &cfg.clone().replication(0).with_trace(true))?;
        let mut text = String::from("time,kind,n_jobs,n_busy,n_setup\n");
        text.push_str(&trace_to_csv(rep.trace.as_deref().unwrap_or_default()));
        write_atomic(path, &text)?;
    }
    let rows = [
        ("policy", policy.label()),
        ("horizon", real(cfg.horizon)),
        ("warmup", real(cfg.warmup)),
        ("seed", a.seed.to_string()),
        ("replications", a.replications.to_string()),
        ("mean_wait", real(est.wait.mean)),
        ("ci", real(est.wait.ci_half_width)),
        ("mean_q", real(est.queue_length.mean)),
        ("ci_q", real(est.queue_length.ci_half_width)),
        ("little_difference", real(est.little.difference)),
        ("little_consistent", est.little.consistent().to_string()),
        ("events", est.wait.total_events.to_string()),
    ];
    for (name, value) in rows {
        println!("{name:<18} {value}");
    }
    if !est.little.consistent() {
        eprintln!(
            "warning: queue length and wait disagree under Little's law beyond the CI; the horizon may be too short"
        );
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let spec = sweep::SweepSpec::from_file(&a.spec)?;
    let quiet = a.quiet;
    let rows = sweep::run(&spec, |r| {
        if !quiet {
            eprintln!("{}={} {}: wait {:.4e}", spec.sweep.name(), r.point.value, r.point.policy.label(), r.mean_wait);
        }
    })?;
    emit(a.out.as_ref(), &sweep::to_csv(&spec, &rows))
}

fn cmd_provision(a: &ProvisionArgs) -> Result<(), CliError> {
    let budget = |warmups: f64| SimBudget { horizon_warmups: warmups, replications: a.replications, seed: a.seed };
    let fine = budget(a.sim_warmups);
    let coarse = budget(a.probe_warmups);
    let opts = ProvisionOptions { k_max: a.k_max, verify_by_sim: a.verify.then_some(fine) };
    let rows: Vec<ProvisionRow> = match &a.model {
        None => provision::provisioning_table(
            a.target,
            a.rho,
            a.mu,
            a.beta,
            &ProvisionOptions { verify_by_sim: None, ..opts },
            a.exp_sim.then_some((&coarse, &fine)),
        )?,
        Some(name) => {
            let model = ProvisionModel::parse(name).ok_or_else(|| {
                CliError::Usage(format!("unknown model {name:?}; expected det-approx, low-r, upper-bound or erlang-c"))
            })?;
            let analytic = ProvisionOptions { verify_by_sim: None, ..opts };
            match provision::min_servers_for_wait(a.target, a.rho, a.mu, a.beta, model, &analytic) {
                Ok(r) => vec![ProvisionRow {
                    model: r.model,
                    k: Some(r.k),
                    predicted_wait: Some(r.predicted_wait),
                    non_monotone: r.non_monotone,
                }],
                Err(provision::ProvisionError::Unachievable { model, .. }) => {
                    vec![ProvisionRow { model, k: None, predicted_wait: None, non_monotone: false }]
                }
                Err(e) => return Err(e.into()),
            }
        }
    };
    let mut out = String::from("model,k,predicted_wait,non_monotone,sim_wait,sim_ci,confirmed\n");
    for row in &rows {
        // The analytic search is cheap, so verification reruns it with simulation on.
        let verification = match (a.verify, row.k, ProvisionModel::parse(row.model)) {
            (true, Some(_), Some(model)) => {
                provision::min_servers_for_wait(a.target, a.rho, a.mu, a.beta, model, &opts)?.verification
            }
            _ => None,
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.model,
            row.k.map(|k| k.to_string()).unwrap_or_default(),
            opt_real(row.predicted_wait),
            row.non_monotone,
            opt_real(verification.as_ref().map(|v| v.wait_at_k.mean)),
            opt_real(verification.as_ref().map(|v| v.wait_at_k.ci_half_width)),
            verification.as_ref().map(|v| (v.confirmed && v.rejects_below).to_string()).unwrap_or_default(),
        ));
    }
    print!("{out}");
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), CliError> {
    let claims: Vec<Claim> = if a.claims.is_empty() {
        Claim::ALL.to_vec()
    } else {
        a.claims
            .iter()
            .map(|s| {
                Claim::parse(s.trim()).ok_or_else(|| {
                    let known: Vec<&str> = Claim::ALL.iter().map(Claim::name).collect();
                    CliError::Usage(format!("unknown claim {s:?}; expected one of {}", known.join(", ")))
                })
            })
            .collect::<Result<_, _>>()?
    };
    if let Some(s) = a.slack {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(CliError::Usage(format!("slack must be non-negative, got {s}")));
        }
    }
    let budget = OracleBudget::default().scaled(a.budget)?;
    let verdicts = run_suite(&claims, a.seed, &budget, a.slack)?;
    emit(a.out.as_ref(), &manifest_csv(&verdicts))?;
    let failed: Vec<&str> = verdicts.iter().filter(|v| v.failed_assertion()).map(|v| v.claim_id.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("failed claims: {}", failed.join(", "))))
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Provision(a) => cmd_provision(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
