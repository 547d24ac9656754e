//! Sweep specs and the sweep CSV.
//!
//! A spec is one TOML document:
//!
//! ```toml
//! format_version = 1
//! sweep = "k"                 # k | rho | beta | m
//! values = [2, 10, 50, 100]
//! k = 100                     # fixed values of the axes not swept
//! rho = 0.5
//! mu = 1.0
//! beta = 200.0
//! policies = ["deterministic", "exponential", "no-setup"]
//! seed = 1
//! replications = 4
//! horizon_warmups = 20.0      # or `horizon = ...`
//! ```

use std::collections::BTreeSet;

use serde::Deserialize;
use setupq::analytic::{bounds_report, q_lower_mpolicy, BoundConstants};
use setupq::estimate;
use setupq::model::{SetupPolicy, SystemParams};
use setupq::sim::{default_warmup, SimConfig};

use crate::output::real;
use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

pub const CSV_HEADER: &str =
    "sweep_var,value,policy,mean_wait,ci,mean_q,ci_q,q_approx,q_upper,q_lower,q_low_r,in_region,seed,replications";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    K,
    Rho,
    Beta,
    M,
}

impl SweepVar {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVar::K => "k",
            SweepVar::Rho => "rho",
            SweepVar::Beta => "beta",
            SweepVar::M => "m",
        }
    }

    fn integral(&self) -> bool {
        matches!(self, SweepVar::K | SweepVar::M)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
pub enum PolicyName {
    #[serde(rename = "deterministic")]
    Deterministic,
    #[serde(rename = "exponential")]
    Exponential,
    #[serde(rename = "no-setup")]
    NoSetup,
}

fn default_mu() -> f64 {
    1.0
}

fn default_replications() -> usize {
    4
}

fn default_horizon_warmups() -> f64 {
    20.0
}

fn default_policies() -> Vec<PolicyName> {
    vec![PolicyName::Deterministic]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub format_version: u32,
    pub sweep: SweepVar,
    pub values: Vec<f64>,
    pub k: Option<u64>,
    pub rho: Option<f64>,
    #[serde(default = "default_mu")]
    pub mu: f64,
    pub beta: Option<f64>,
    /// Buffer of the deterministic policy when `m` is not swept.
    #[serde(default)]
    pub m: u64,
    /// Mean setup of the exponential policy; defaults to `beta`.
    pub setup_mean: Option<f64>,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyName>,
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Absolute horizon. Overrides `horizon_warmups`.
    pub horizon: Option<f64>,
    /// Horizon past the warmup, as a multiple of the warmup.
    #[serde(default = "default_horizon_warmups")]
    pub horizon_warmups: f64,
    /// Absolute warmup. Defaults to `max(10 beta, 100 / (mu (1 - rho)))`.
    pub warmup: Option<f64>,
    pub max_events: Option<u64>,
}

/// One simulation to run: a grid point under one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub params: SystemParams<f64>,
    pub policy: SetupPolicy,
    pub config: SimConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub mean_wait: f64,
    pub ci: f64,
    pub mean_q: f64,
    pub ci_q: f64,
    pub q_approx: f64,
    pub q_upper: f64,
    /// Lower bound for the row's policy; `None` when it is unavailable.
    pub q_lower: Option<f64>,
    pub q_low_r: f64,
    pub in_region: bool,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn need<T: Copy>(name: &str, v: Option<T>) -> Result<T, CliError> {
    v.ok_or_else(|| usage(format!("spec: `{name}` is required unless it is the swept axis")))
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| usage(format!("spec: {}", e.message())))?;
        if spec.format_version != FORMAT_VERSION {
            return Err(usage(format!(
                "spec: format_version {} is not supported (expected {FORMAT_VERSION})",
                spec.format_version
            )));
        }
        Ok(spec)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("spec {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Expands the grid, validating every point before anything runs.
    pub fn points(&self) -> Result<Vec<SweepPoint>, CliError> {
        if self.values.is_empty() {
            return Err(usage("spec: `values` is an empty grid"));
        }
        if self.policies.is_empty() {
            return Err(usage("spec: `policies` is empty"));
        }
        if self.policies.iter().collect::<BTreeSet<_>>().len() != self.policies.len() {
            return Err(usage("spec: `policies` lists a policy twice"));
        }
        if self.replications < 2 {
            return Err(usage(format!("spec: `replications` must be at least 2, got {}", self.replications)));
        }
        if !(self.horizon_warmups > 0.0 && self.horizon_warmups.is_finite()) {
            return Err(usage(format!("spec: `horizon_warmups` must be positive, got {}", self.horizon_warmups)));
        }
        let mut out = Vec::new();
        for &value in &self.values {
            if !value.is_finite() || (self.sweep.integral() && (value < 0.0 || value.fract() != 0.0)) {
                return Err(usage(format!("spec: {} value {value} is not valid", self.sweep.name())));
            }
            let (k, rho, beta, m) = match self.sweep {
                SweepVar::K => (value as u64, need("rho", self.rho)?, need("beta", self.beta)?, self.m),
                SweepVar::Rho => (need("k", self.k)?, value, need("beta", self.beta)?, self.m),
                SweepVar::Beta => (need("k", self.k)?, need("rho", self.rho)?, value, self.m),
                SweepVar::M => (need("k", self.k)?, need("rho", self.rho)?, need("beta", self.beta)?, value as u64),
            };
            let params = SystemParams::new(k, rho, self.mu, beta)?;
            for name in &self.policies {
                let policy = match name {
                    PolicyName::Deterministic => SetupPolicy::DeterministicSetup { buffer: m },
                    PolicyName::Exponential => {
                        SetupPolicy::ExponentialSetup { mean_setup: self.setup_mean.unwrap_or(beta) }
                    }
                    PolicyName::NoSetup => SetupPolicy::NoSetup,
                };
                policy.check(&params)?;
                let config = self.config(&params);
                config.validate()?;
                out.push(SweepPoint { value, params, policy, config });
            }
        }
        Ok(out)
    }

    fn config(&self, params: &SystemParams<f64>) -> SimConfig {
        let warmup = self.warmup.unwrap_or_else(|| default_warmup(params));
        let horizon = self.horizon.unwrap_or(warmup * (1.0 + self.horizon_warmups));
        let cfg = SimConfig::new(horizon, warmup, self.seed);
        match self.max_events {
            Some(n) => cfg.with_max_events(n),
            None => cfg,
        }
    }
}

pub fn run_point(point: &SweepPoint, replications: usize) -> Result<SweepRow, CliError> {
    let est = estimate::estimate(&point.params, &point.policy, &point.config, replications)?;
    let c = BoundConstants::default();
    let report = bounds_report(&point.params, &c);
    // Buffered rows get the m-policy lower bound; the other columns always
    // describe the base policy.
    let q_lower = match point.policy {
        SetupPolicy::DeterministicSetup { buffer } if buffer > 0 => q_lower_mpolicy(&point.params, buffer, &c).ok(),
        _ => report.lower_available.then_some(report.q_lower),
    };
    Ok(SweepRow {
        point: point.clone(),
        mean_wait: est.wait.mean,
        ci: est.wait.ci_half_width,
        mean_q: est.queue_length.mean,
        ci_q: est.queue_length.ci_half_width,
        q_approx: report.q_approx,
        q_upper: report.q_upper,
        q_lower,
        q_low_r: report.q_low_r,
        in_region: report.in_region,
    })
}

/// Runs every point in grid order. `progress` is called after each row.
pub fn run(spec: &SweepSpec, mut progress: impl FnMut(&SweepRow)) -> Result<Vec<SweepRow>, CliError> {
    let points = spec.points()?;
    let mut rows = Vec::with_capacity(points.len());
    for p in &points {
        let row = run_point(p, spec.replications)?;
        progress(&row);
        rows.push(row);
    }
    Ok(rows)
}

fn value_cell(var: SweepVar, value: f64) -> String {
    if var.integral() {
        format!("{}", value as u64)
    } else {
        real(value)
    }
}

pub fn to_csv(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let cells = [
            spec.sweep.name().to_string(),
            value_cell(spec.sweep, r.point.value),
            r.point.policy.label(),
            real(r.mean_wait),
            real(r.ci),
            real(r.mean_q),
            real(r.ci_q),
            real(r.q_approx),
            real(r.q_upper),
            r.q_lower.map(real).unwrap_or_default(),
            real(r.q_low_r),
            r.in_region.to_string(),
            spec.seed.to_string(),
            spec.replications.to_string(),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
format_version = 1
sweep = "k"
values = [2, 4]
rho = 0.5
beta = 2.0
policies = ["deterministic", "no-setup"]
seed = 3
replications = 2
horizon = 2000.0
warmup = 100.0
"#;

    #[test]
    fn parses_and_expands() {
        let spec = SweepSpec::parse(BASE).unwrap();
        let points = spec.points().unwrap();
        assert_eq!(points.len(), 4);
        assert_eq!(points[0].params.k(), 2);
        assert_eq!(points[1].policy, SetupPolicy::NoSetup);
        assert_eq!(points[3].params.k(), 4);
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = [
            BASE.replace("format_version = 1", "format_version = 2"),
            BASE.replace("values = [2, 4]", "values = []"),
            BASE.replace("values = [2, 4]", "values = [2.5]"),
            BASE.replace("rho = 0.5", "rho = 1.0"),
            BASE.replace("rho = 0.5", ""),
            BASE.replace("seed = 3", "seed = 3\nbogus = 1"),
            BASE.replace("replications = 2", "replications = 1"),
            BASE.replace("sweep = \"k\"", "sweep = \"lambda\""),
            BASE.replace("\"no-setup\"", "\"deterministic\""),
        ];
        for text in bad {
            let res = SweepSpec::parse(&text).and_then(|s| s.points());
            assert!(matches!(res, Err(CliError::Usage(_))), "{text}");
        }
    }

    #[test]
    fn m_sweep_sets_buffer_and_checks_it() {
        let text = BASE.replace("sweep = \"k\"", "sweep = \"m\"\nk = 3").replace("values = [2, 4]", "values = [0, 2]");
        let points = SweepSpec::parse(&text).unwrap().points().unwrap();
        assert_eq!(points[2].policy, SetupPolicy::DeterministicSetup { buffer: 2 });
        let over = text.replace("values = [0, 2]", "values = [4]");
        assert!(matches!(SweepSpec::parse(&over).unwrap().points(), Err(CliError::Usage(_))));
    }

    #[test]
    fn csv_is_deterministic() {
        let spec = SweepSpec::parse(BASE).unwrap();
        let a = to_csv(&spec, &run(&spec, |_| {}).unwrap());
        let b = to_csv(&spec, &run(&spec, |_| {}).unwrap());
        assert_eq!(a, b);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("k,2,deterministic,"));
        assert!(lines.iter().all(|l| l.split(',').count() == 14));
    }
}
