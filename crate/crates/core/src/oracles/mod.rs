//! Monte-Carlo and exact checks of the probabilistic claims the bounds rest
//! on. Each check yields an [`OracleVerdict`]; one-sided claims are judged
//! conservatively, `estimate + ci` against an upper bound and
//! `estimate - ci` against a lower one.

pub mod montecarlo;

use std::fmt::Write as _;

use thiserror::Error;

use crate::analytic::{
    hitting_tail_lower, hitting_tail_upper, mminf_passage_mean, q_lower_mpolicy, stopped_busy_mean_upper,
    symmetric_survival, AnalyticError, BoundConstants, CatalanPmf,
};
use crate::estimate::{self, estimate_cycles, summarize, EstimateError, Quantity};
use crate::model::{AssumptionRegion, ModelError, SetupPolicy, SystemParams};
use crate::sim::{run_renewal_cycles, CycleStats, SimConfig, SimError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("InvalidBudget: {0}")]
    InvalidBudget(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// The quantity is claimed to be at most the bound.
    AtMost,
    /// The quantity is claimed to be at least the bound.
    AtLeast,
    /// The quantity is claimed to equal the bound; `ci` is the allowed gap.
    Matches,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::AtMost => "<=",
            Direction::AtLeast => ">=",
            Direction::Matches => "==",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleVerdict {
    pub claim_id: String,
    pub estimate: f64,
    /// Confidence half-width of the estimate; zero for exact evaluations.
    pub ci_half_width: f64,
    /// The claimed value.
    pub bound: f64,
    /// Relative slack: the estimate is compared with `bound (1 + slack)` for
    /// upper bounds and `bound (1 - slack)` for lower bounds.
    pub slack: f64,
    pub direction: Direction,
    pub in_region: bool,
    /// Out-of-region verdicts are reported but never asserted.
    pub asserted: bool,
    pub passed: bool,
    pub note: String,
}

impl OracleVerdict {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        claim_id: impl Into<String>,
        estimate: f64,
        ci_half_width: f64,
        bound: f64,
        slack: f64,
        direction: Direction,
        in_region: bool,
        note: impl Into<String>,
    ) -> Self {
        let mut v = Self {
            claim_id: claim_id.into(),
            estimate,
            ci_half_width,
            bound,
            slack,
            direction,
            in_region,
            asserted: in_region,
            passed: false,
            note: note.into(),
        };
        v.passed = v.margin() >= 0.0;
        v
    }

    pub fn threshold(&self) -> f64 {
        match self.direction {
            Direction::AtMost => self.bound * (1.0 + self.slack),
            Direction::AtLeast => self.bound * (1.0 - self.slack),
            Direction::Matches => self.bound,
        }
    }

    /// Distance by which the verdict passes; negative when it fails.
    pub fn margin(&self) -> f64 {
        match self.direction {
            Direction::AtMost => self.threshold() - (self.estimate + self.ci_half_width),
            Direction::AtLeast => (self.estimate - self.ci_half_width) - self.threshold(),
            Direction::Matches => self.ci_half_width * (1.0 + self.slack) - (self.estimate - self.bound).abs(),
        }
    }

    pub fn failed_assertion(&self) -> bool {
        self.asserted && !self.passed
    }
}

pub const MANIFEST_HEADER: &str =
    "claim_id,estimate,ci,bound,slack,threshold,margin,direction,in_region,asserted,passed,note";

/// CSV manifest, one line per verdict, reals at 17 significant digits.
pub fn manifest_csv(verdicts: &[OracleVerdict]) -> String {
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    for v in verdicts {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{},{}",
            v.claim_id,
            v.estimate,
            v.ci_half_width,
            v.bound,
            v.slack,
            v.threshold(),
            v.margin(),
            v.direction.as_str(),
            v.in_region,
            v.asserted,
            v.passed,
            v.note.replace(',', ";"),
        );
    }
    out
}

/// `1.15 / 1.08 - 1`: the accumulation-time claim is checked at `1.15 beta`.
pub const ACCUMULATION_SLACK: f64 = 1.15 / 1.08 - 1.0;
/// The first-long-epoch bound is checked at 80% of its value.
pub const FIRST_LONG_EPOCH_SLACK: f64 = 0.2;

/// Runs renewal cycles split across `streams` independent streams.
pub fn renewal_cycles(
    params: &SystemParams<f64>,
    n_cycles: usize,
    seed: u64,
    streams: usize,
) -> Result<CycleStats, OracleError> {
    use rayon::prelude::*;
    let streams = streams.clamp(1, n_cycles.max(1));
    let parts: Result<Vec<CycleStats>, SimError> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let share = n_cycles / streams + usize::from(s < n_cycles % streams);
            run_renewal_cycles(params, &SimConfig::new(1.0, 0.0, seed).replication(s as u64), share)
        })
        .collect();
    let parts = parts?;
    let mut merged = CycleStats { threshold: parts[0].threshold, cycles: Vec::with_capacity(n_cycles), events: 0 };
    for p in parts {
        merged.cycles.extend(p.cycles);
        merged.events += p.events;
    }
    Ok(merged)
}

fn in_region(params: &SystemParams<f64>) -> bool {
    AssumptionRegion::default().contains(params)
}

/// `E[T_A] <= 1.08 beta`, checked with slack at `1.15 beta`.
pub fn accumulation_time_verdict(
    params: &SystemParams<f64>,
    stats: &CycleStats,
    slack: f64,
) -> Result<OracleVerdict, OracleError> {
    let e = estimate_cycles(stats, Quantity::MeanAccumulationTime, params.offered_load())?;
    Ok(OracleVerdict::new(
        "accumulation_time",
        e.mean,
        e.ci_half_width,
        1.08 * params.beta(),
        slack,
        Direction::AtMost,
        in_region(params),
        format!("{} cycles", e.n_replications),
    ))
}

/// `E[L] >= (2/3) sqrt(pi/2) sqrt(R)`, checked with slack at 80%.
pub fn first_long_epoch_verdict(
    params: &SystemParams<f64>,
    stats: &CycleStats,
    slack: f64,
    c: &BoundConstants<f64>,
) -> Result<OracleVerdict, OracleError> {
    let e = estimate_cycles(stats, Quantity::MeanFirstLongEpoch, params.offered_load())?;
    Ok(OracleVerdict::new(
        "first_long_epoch",
        e.mean,
        e.ci_half_width,
        c.l1 * params.offered_load().sqrt(),
        slack,
        Direction::AtLeast,
        in_region(params),
        format!("{} cycles", e.n_replications),
    ))
}

/// `E[N(T_A) - R] <= 2.9 mu beta sqrt(R)` and the matching second-moment bound.
pub fn nta_verdicts(
    params: &SystemParams<f64>,
    stats: &CycleStats,
    slack: f64,
    c: &BoundConstants<f64>,
) -> Result<Vec<OracleVerdict>, OracleError> {
    let r = params.offered_load();
    let mb = params.relative_setup();
    let first = estimate_cycles(stats, Quantity::MeanNTA, r)?;
    let second = estimate_cycles(stats, Quantity::SecondMomentNTA, r)?;
    let second_bound = c.f1 * c.f1 * mb * mb * r * (1.0 + c.f2 / mb.sqrt()).powi(2) + 2.0 * mb * r;
    let region = in_region(params);
    Ok(vec![
        OracleVerdict::new(
            "nta_mean",
            first.mean,
            first.ci_half_width,
            2.9 * mb * r.sqrt(),
            slack,
            Direction::AtMost,
            region,
            "",
        ),
        OracleVerdict::new(
            "nta_second_moment",
            second.mean,
            second.ci_half_width,
            second_bound,
            slack,
            Direction::AtMost,
            region,
            "",
        ),
    ])
}

pub fn check_accumulation_time(
    params: &SystemParams<f64>,
    n_cycles: usize,
    seed: u64,
) -> Result<OracleVerdict, OracleError> {
    let stats = renewal_cycles(params, n_cycles, seed, 4)?;
    accumulation_time_verdict(params, &stats, ACCUMULATION_SLACK)
}

pub fn check_first_long_epoch(
    params: &SystemParams<f64>,
    n_cycles: usize,
    seed: u64,
) -> Result<OracleVerdict, OracleError> {
    let stats = renewal_cycles(params, n_cycles, seed, 4)?;
    first_long_epoch_verdict(params, &stats, FIRST_LONG_EPOCH_SLACK, &BoundConstants::default())
}

pub fn check_nta(params: &SystemParams<f64>, n_cycles: usize, seed: u64) -> Result<Vec<OracleVerdict>, OracleError> {
    let stats = renewal_cycles(params, n_cycles, seed, 4)?;
    nta_verdicts(params, &stats, 0.0, &BoundConstants::default())
}

fn bernoulli_estimate(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, estimate::t_quantile(n) * (p * (1.0 - p) / (n - 1) as f64).sqrt())
}

/// Busy-period tails of the critically loaded M/M/1 (both rates `mu R`)
/// against the upper and lower tail bounds at each `t`. Grid points with
/// `nu = 2 R mu t < 3` are skipped with a note.
pub fn check_hitting_tails(
    offered_load: f64,
    mu: f64,
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
    c: &BoundConstants<f64>,
) -> Result<Vec<OracleVerdict>, OracleError> {
    if n_samples < 2 {
        return Err(OracleError::InvalidBudget("need at least two samples".into()));
    }
    let rate = mu * offered_load;
    let cap = t_grid.iter().copied().fold(0.0, f64::max) * (1.0 + 1e-9);
    let samples = montecarlo::critical_busy_periods(rate, cap, n_samples, seed);
    let mut out = Vec::new();
    for &t in t_grid {
        let nu = 2.0 * rate * t;
        let id = format!("hitting_tail:t={t}");
        let (upper, lower) = match (hitting_tail_upper(nu, c), hitting_tail_lower(nu, c)) {
            (Ok(u), Ok(l)) => (u, l),
            _ => {
                let mut v = OracleVerdict::new(id, f64::NAN, 0.0, f64::NAN, 0.0, Direction::AtMost, false, "");
                v.note = format!("skipped: HypothesisViolated (nu = {nu} < 3)");
                out.push(v);
                continue;
            }
        };
        let (p, ci) = bernoulli_estimate(samples.iter().filter(|&&x| x >= t).count(), n_samples);
        let exact = montecarlo::critical_busy_tail_exact(nu);
        let note = format!("nu = {nu}; exact tail {exact:.6e}");
        out.push(OracleVerdict::new(format!("{id}:upper"), p, ci, upper, 0.0, Direction::AtMost, true, note.clone()));
        out.push(OracleVerdict::new(format!("{id}:lower"), p, ci, lower, 0.0, Direction::AtLeast, true, note));
    }
    Ok(out)
}

/// `E[min(beta, tau)] <= b1 sqrt(beta / (mu R)) + 6 / (mu R)` for the
/// critically loaded M/M/1 busy period started by one job.
pub fn check_stopped_busy(
    beta: f64,
    offered_load: f64,
    mu: f64,
    n_samples: usize,
    seed: u64,
    c: &BoundConstants<f64>,
) -> Result<OracleVerdict, OracleError> {
    let samples = montecarlo::critical_busy_periods(mu * offered_load, beta, n_samples, seed);
    let e = summarize(Quantity::Other, &samples, 0)?;
    let bound = stopped_busy_mean_upper(beta, offered_load, mu, c);
    let hypotheses = mu * beta >= 100.0 && offered_load >= 100.0;
    Ok(OracleVerdict::new(
        format!("stopped_busy:beta={beta}:R={offered_load}"),
        e.mean,
        e.ci_half_width,
        bound,
        0.0,
        Direction::AtMost,
        hypotheses,
        format!("{n_samples} busy periods"),
    ))
}

/// Exact check of `mminf_passage_mean(R, h) <= 7 / (mu sqrt(R))` for every
/// `h` in `1..=floor(sqrt(R))`; the verdict carries the worst `h`.
/// Loads below 100 are evaluated but not asserted.
pub fn check_mminf_passage(loads: &[u64], mu: f64) -> Result<Vec<OracleVerdict>, OracleError> {
    let mut out = Vec::with_capacity(loads.len());
    for &r in loads {
        let hmax = ((r as f64).sqrt().floor() as u64).max(1);
        let mut worst = (0.0f64, 1u64);
        for h in 1..=hmax {
            let v = mminf_passage_mean(r, h, mu)?;
            if v > worst.0 {
                worst = (v, h);
            }
        }
        let bound = 7.0 / (mu * (r as f64).sqrt());
        let note = if r >= 100 {
            format!("worst h = {} of {hmax}", worst.1)
        } else {
            format!("worst h = {} of {hmax}; R below 100 so reported only", worst.1)
        };
        out.push(OracleVerdict::new(
            format!("mminf_passage:R={r}"),
            worst.0,
            0.0,
            bound,
            0.0,
            Direction::AtMost,
            r >= 100,
            note,
        ));
    }
    Ok(out)
}

/// The pmf sums to one for `p <= 1/2`. The symmetric walk's tail decays
/// like `ell^(-1/2)`, so at `p = 1/2` the partial sum is completed with the
/// exact reflection-principle tail instead of more terms.
pub fn check_catalan_sum(ps: &[f64], terms: u64) -> Vec<OracleVerdict> {
    ps.iter()
        .map(|&p| {
            let partial: f64 = CatalanPmf::new(p).take(terms as usize).sum();
            let tail = if p == 0.5 { symmetric_survival(terms - 1) } else { 0.0 };
            let total = partial + tail;
            let note = if p == 0.5 {
                format!("partial {partial:.12e} plus reflection tail {tail:.6e}")
            } else {
                format!("{terms} terms")
            };
            OracleVerdict::new(
                format!("catalan_sum:p={p}"),
                (total - 1.0).abs(),
                0.0,
                1e-6,
                0.0,
                Direction::AtMost,
                p <= 0.5,
                note,
            )
        })
        .collect()
}

/// Simulated walks against the summed pmf: `P(gamma <= 2T + 1)`. The
/// allowed gap is four standard errors.
pub fn check_catalan_walk(p: f64, half_steps: u64, n_samples: usize, seed: u64) -> OracleVerdict {
    let hits = montecarlo::walk_absorbed_within(p, 2 * half_steps + 1, n_samples, seed);
    let est = hits.iter().filter(|&&h| h).count() as f64 / n_samples as f64;
    let exact: f64 = CatalanPmf::new(p).take(half_steps as usize + 1).sum();
    let gap = 4.0 * (exact * (1.0 - exact) / n_samples as f64).sqrt();
    OracleVerdict::new(
        format!("catalan_walk:p={p}:steps={}", 2 * half_steps + 1),
        est,
        gap,
        exact,
        0.0,
        Direction::Matches,
        true,
        "allowed gap is four standard errors",
    )
}

/// One point of the m-policy sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MPolicyPoint {
    pub m: u64,
    pub queue_length: estimate::SimEstimate,
    pub wait: estimate::SimEstimate,
    pub lower_bound: f64,
}

/// Simulated `E[Q]` under the buffered policy against its lower bound for
/// each `m`. Returns the verdicts and the sweep curve.
pub fn check_mpolicy_bound(
    params: &SystemParams<f64>,
    m_list: &[u64],
    cfg: &SimConfig,
    n_replications: usize,
    c: &BoundConstants<f64>,
) -> Result<(Vec<OracleVerdict>, Vec<MPolicyPoint>), OracleError> {
    let mut verdicts = Vec::new();
    let mut curve = Vec::new();
    for &m in m_list {
        let bound = q_lower_mpolicy(params, m, c)?;
        let est = estimate::estimate(params, &SetupPolicy::DeterministicSetup { buffer: m }, cfg, n_replications)?;
        verdicts.push(OracleVerdict::new(
            format!("mpolicy_bound:m={m}"),
            est.queue_length.mean,
            est.queue_length.ci_half_width,
            bound,
            0.0,
            Direction::AtLeast,
            in_region(params),
            format!("mean wait {:.6e}", est.wait.mean),
        ));
        curve.push(MPolicyPoint { m, queue_length: est.queue_length, wait: est.wait, lower_bound: bound });
    }
    Ok((verdicts, curve))
}

/// Claims runnable from the verification suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Claim {
    AccumulationTime,
    FirstLongEpoch,
    Nta,
    HittingTails,
    StoppedBusy,
    MminfPassage,
    Catalan,
    MPolicyBound,
}

impl Claim {
    pub const ALL: [Claim; 8] = [
        Claim::AccumulationTime,
        Claim::FirstLongEpoch,
        Claim::Nta,
        Claim::HittingTails,
        Claim::StoppedBusy,
        Claim::MminfPassage,
        Claim::Catalan,
        Claim::MPolicyBound,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Claim::AccumulationTime => "accumulation_time",
            Claim::FirstLongEpoch => "first_long_epoch",
            Claim::Nta => "nta",
            Claim::HittingTails => "hitting_tails",
            Claim::StoppedBusy => "stopped_busy",
            Claim::MminfPassage => "mminf_passage",
            Claim::Catalan => "catalan",
            Claim::MPolicyBound => "mpolicy_bound",
        }
    }

    pub fn parse(s: &str) -> Option<Claim> {
        Claim::ALL.into_iter().find(|c| c.name() == s)
    }

    fn uses_cycles(&self) -> bool {
        matches!(self, Claim::AccumulationTime | Claim::FirstLongEpoch | Claim::Nta)
    }
}

/// Sample sizes of the verification suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleBudget {
    pub cycles: usize,
    pub tail_samples: usize,
    pub stopped_samples: usize,
    pub walk_samples: usize,
    pub catalan_terms: u64,
    pub mpolicy_horizon: f64,
    pub mpolicy_replications: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            cycles: 10_000,
            tail_samples: 1_000_000,
            stopped_samples: 200_000,
            walk_samples: 200_000,
            catalan_terms: 1_000_000,
            mpolicy_horizon: 100_000.0,
            mpolicy_replications: 4,
        }
    }
}

impl OracleBudget {
    /// Scales every Monte-Carlo size by `factor`, keeping the minimums a CI needs.
    pub fn scaled(&self, factor: f64) -> Result<Self, OracleError> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(OracleError::InvalidBudget(format!("budget factor must be positive, got {factor}")));
        }
        let n = |x: usize| ((x as f64 * factor).round() as usize).max(10);
        Ok(Self {
            cycles: n(self.cycles),
            tail_samples: n(self.tail_samples),
            stopped_samples: n(self.stopped_samples),
            walk_samples: n(self.walk_samples),
            catalan_terms: self.catalan_terms,
            mpolicy_horizon: (self.mpolicy_horizon * factor).max(20_000.0),
            mpolicy_replications: self.mpolicy_replications,
        })
    }
}

/// Fixed scenarios of the suite.
pub fn renewal_scenario() -> SystemParams<f64> {
    SystemParams::new(250, 0.4, 1.0, 100.0).expect("valid scenario")
}

pub const TAIL_GRID: [f64; 4] = [0.05, 0.2, 1.0, 5.0];
pub const TAIL_LOAD: f64 = 50.0;
pub const MMINF_LOADS: [u64; 4] = [4, 100, 400, 10_000];
pub const MPOLICY_BUFFERS: [u64; 4] = [0, 1, 5, 10];

/// Runs the selected claims. `slack` overrides the per-claim default slack of
/// the renewal claims.
pub fn run_suite(
    claims: &[Claim],
    seed: u64,
    budget: &OracleBudget,
    slack: Option<f64>,
) -> Result<Vec<OracleVerdict>, OracleError> {
    let c = BoundConstants::default();
    let params = renewal_scenario();
    let stats = if claims.iter().any(Claim::uses_cycles) {
        Some(renewal_cycles(&params, budget.cycles, seed, 4)?)
    } else {
        None
    };
    let mut out = Vec::new();
    for claim in Claim::ALL.into_iter().filter(|c| claims.contains(c)) {
        match claim {
            Claim::AccumulationTime => out.push(accumulation_time_verdict(
                &params,
                stats.as_ref().expect("cycles"),
                slack.unwrap_or(ACCUMULATION_SLACK),
            )?),
            Claim::FirstLongEpoch => out.push(first_long_epoch_verdict(
                &params,
                stats.as_ref().expect("cycles"),
                slack.unwrap_or(FIRST_LONG_EPOCH_SLACK),
                &c,
            )?),
            Claim::Nta => out.extend(nta_verdicts(&params, stats.as_ref().expect("cycles"), slack.unwrap_or(0.0), &c)?),
            Claim::HittingTails => {
                out.extend(check_hitting_tails(TAIL_LOAD, 1.0, &TAIL_GRID, budget.tail_samples, seed, &c)?)
            }
            Claim::StoppedBusy => {
                for beta in [100.0, 400.0] {
                    out.push(check_stopped_busy(beta, 100.0, 1.0, budget.stopped_samples, seed, &c)?);
                }
            }
            Claim::MminfPassage => out.extend(check_mminf_passage(&MMINF_LOADS, 1.0)?),
            Claim::Catalan => {
                out.extend(check_catalan_sum(&[0.1, 0.3, 0.45, 0.5], budget.catalan_terms));
                out.push(check_catalan_walk(0.4, 20, budget.walk_samples, seed));
                out.push(check_catalan_walk(0.5, 20, budget.walk_samples, seed.wrapping_add(1)));
            }
            Claim::MPolicyBound => {
                let cfg = SimConfig::for_params(&params, budget.mpolicy_horizon, seed);
                out.extend(check_mpolicy_bound(&params, &MPOLICY_BUFFERS, &cfg, budget.mpolicy_replications, &c)?.0);
            }
        }
    }
    Ok(out)
}
