//! Smallest server count whose predicted mean wait meets a target, with the
//! load `rho` held fixed as `k` grows.

use thiserror::Error;

use crate::analytic::{erlang_c_wait, q_approx, q_low_r, q_upper, AnalyticError, BoundConstants};
use crate::estimate::{self, EstimateError, SimEstimate};
use crate::model::{ModelError, SetupPolicy, SystemParams};
use crate::sim::SimConfig;

pub const DEFAULT_K_MAX: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProvisionError {
    #[error("InvalidTarget: target wait must be positive, got {0}")]
    InvalidTarget(f64),
    #[error("Unachievable: {model} misses the target even at k = {k_max}")]
    Unachievable { model: &'static str, k_max: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProvisionModel {
    /// The deterministic-setup approximation.
    DetApprox,
    /// The low-load approximation.
    LowR,
    /// The deterministic-setup upper bound.
    UpperBound,
    /// M/M/k without setup.
    ErlangC,
}

impl ProvisionModel {
    pub const ALL: [ProvisionModel; 4] =
        [ProvisionModel::DetApprox, ProvisionModel::LowR, ProvisionModel::UpperBound, ProvisionModel::ErlangC];

    pub fn name(&self) -> &'static str {
        match self {
            ProvisionModel::DetApprox => "det-approx",
            ProvisionModel::LowR => "low-r",
            ProvisionModel::UpperBound => "upper-bound",
            ProvisionModel::ErlangC => "erlang-c",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// Predicted mean wait at `k` servers. Setup can only add delay, so the
/// setup models never predict less than the no-setup Erlang-C wait. At
/// `beta = 0` the system is exactly M/M/k and every model returns Erlang-C.
pub fn predicted_wait(model: ProvisionModel, k: u64, rho: f64, mu: f64, beta: f64) -> Result<f64, ProvisionError> {
    let params = SystemParams::new(k, rho, mu, beta)?;
    let c = BoundConstants::default();
    let rate = params.total_arrival_rate();
    let no_setup = erlang_c_wait(k, rho, mu)?;
    if beta == 0.0 {
        return Ok(no_setup);
    }
    let setup = match model {
        ProvisionModel::DetApprox => q_approx(&params, &c) / rate,
        ProvisionModel::LowR => q_low_r(&params) / rate,
        ProvisionModel::UpperBound => q_upper(&params, &c) / rate,
        ProvisionModel::ErlangC => return Ok(no_setup),
    };
    Ok(setup.max(no_setup))
}

/// Simulation check of a returned `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimVerification {
    pub wait_at_k: SimEstimate,
    pub wait_below: Option<SimEstimate>,
    /// The simulated wait at `k` is within target up to its CI.
    pub confirmed: bool,
    /// The simulated wait at `k - 1` exceeds the target up to its CI
    /// (vacuously true at `k = 1`).
    pub rejects_below: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProvisionResult {
    pub model: &'static str,
    pub k: u64,
    pub predicted_wait: f64,
    /// The predictor increased somewhere along the search, so the answer came
    /// from a linear scan.
    pub non_monotone: bool,
    pub verification: Option<SimVerification>,
}

/// Simulation budget used to verify an answer or to search by simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimBudget {
    /// Horizon as a multiple of the default warmup.
    pub horizon_warmups: f64,
    pub replications: usize,
    pub seed: u64,
}

impl Default for SimBudget {
    fn default() -> Self {
        Self { horizon_warmups: 20.0, replications: 4, seed: 1 }
    }
}

impl SimBudget {
    fn config(&self, params: &SystemParams<f64>) -> SimConfig {
        let warmup = crate::sim::default_warmup(params);
        SimConfig::new(warmup * (1.0 + self.horizon_warmups), warmup, self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProvisionOptions {
    pub k_max: u64,
    pub verify_by_sim: Option<SimBudget>,
}

impl Default for ProvisionOptions {
    fn default() -> Self {
        Self { k_max: DEFAULT_K_MAX, verify_by_sim: None }
    }
}

/// Smallest `k` in `1..=k_max` with `f(k) <= target`, assuming `f` is
/// eventually below target. Brackets by doubling, then bisects; any increase
/// seen along the way triggers a linear scan of the bracket instead.
pub(crate) fn search<E>(
    target: f64,
    k_max: u64,
    mut f: impl FnMut(u64) -> Result<f64, E>,
) -> Result<Option<(u64, f64, bool)>, E> {
    let mut non_monotone = false;
    let mut lo = 0u64;
    let mut lo_val = f64::INFINITY;
    let mut hi = 1u64;
    let mut hi_val;
    loop {
        hi_val = f(hi)?;
        if hi_val > lo_val {
            non_monotone = true;
        }
        if hi_val <= target {
            break;
        }
        if hi == k_max {
            return Ok(None);
        }
        lo = hi;
        lo_val = hi_val;
        hi = (hi * 2).min(k_max);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let v = f(mid)?;
        if v > lo_val || v < hi_val {
            non_monotone = true;
            break;
        }
        if v <= target {
            hi = mid;
            hi_val = v;
        } else {
            lo = mid;
            lo_val = v;
        }
    }
    if non_monotone {
        for k in 1..=hi {
            let v = f(k)?;
            if v <= target {
                return Ok(Some((k, v, true)));
            }
        }
    }
    // Probe below the answer: with a monotone predictor this always exceeds the target.
    if hi > 1 && f(hi - 1)? <= target {
        non_monotone = true;
    }
    Ok(Some((hi, hi_val, non_monotone)))
}

pub fn min_servers_for_wait(
    target_wait: f64,
    rho: f64,
    mu: f64,
    beta: f64,
    model: ProvisionModel,
    opts: &ProvisionOptions,
) -> Result<ProvisionResult, ProvisionError> {
    if !(target_wait > 0.0) {
        return Err(ProvisionError::InvalidTarget(target_wait));
    }
    SystemParams::new(1, rho, mu, beta)?;
    let found = search(target_wait, opts.k_max.max(1), |k| predicted_wait(model, k, rho, mu, beta))?;
    let (k, predicted, non_monotone) =
        found.ok_or(ProvisionError::Unachievable { model: model.name(), k_max: opts.k_max })?;
    let verification = match opts.verify_by_sim {
        Some(budget) => Some(verify(target_wait, k, rho, mu, beta, &budget)?),
        None => None,
    };
    Ok(ProvisionResult { model: model.name(), k, predicted_wait: predicted, non_monotone, verification })
}

fn det_policy(beta: f64) -> SetupPolicy {
    if beta > 0.0 {
        SetupPolicy::BASE
    } else {
        SetupPolicy::NoSetup
    }
}

fn simulated_wait(
    k: u64,
    rho: f64,
    mu: f64,
    beta: f64,
    policy: &SetupPolicy,
    budget: &SimBudget,
) -> Result<SimEstimate, ProvisionError> {
    let params = SystemParams::new(k, rho, mu, beta)?;
    let est = estimate::estimate(&params, policy, &budget.config(&params), budget.replications)?;
    Ok(est.wait)
}

fn verify(
    target: f64,
    k: u64,
    rho: f64,
    mu: f64,
    beta: f64,
    budget: &SimBudget,
) -> Result<SimVerification, ProvisionError> {
    let policy = det_policy(beta);
    let at_k = simulated_wait(k, rho, mu, beta, &policy, budget)?;
    let below = if k > 1 { Some(simulated_wait(k - 1, rho, mu, beta, &policy, budget)?) } else { None };
    Ok(SimVerification {
        confirmed: at_k.lower() <= target,
        rejects_below: below.is_none_or(|b| b.upper() > target),
        wait_at_k: at_k,
        wait_below: below,
    })
}

/// Searches `k` by simulating exponential setup with mean `beta`. The search
/// uses `coarse` for every probe (common seed across `k`, so neighbouring
/// probes share their random streams) and re-estimates the answer with `fine`.
pub fn min_servers_exponential_sim(
    target_wait: f64,
    rho: f64,
    mu: f64,
    beta: f64,
    k_max: u64,
    coarse: &SimBudget,
    fine: &SimBudget,
) -> Result<(u64, SimEstimate), ProvisionError> {
    if !(target_wait > 0.0) {
        return Err(ProvisionError::InvalidTarget(target_wait));
    }
    let policy = if beta > 0.0 { SetupPolicy::ExponentialSetup { mean_setup: beta } } else { SetupPolicy::NoSetup };
    let found =
        search(target_wait, k_max.max(1), |k| simulated_wait(k, rho, mu, beta, &policy, coarse).map(|e| e.mean))?;
    let (k, _, _) = found.ok_or(ProvisionError::Unachievable { model: "exponential-sim", k_max })?;
    Ok((k, simulated_wait(k, rho, mu, beta, &policy, fine)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProvisionRow {
    pub model: &'static str,
    /// `None` when the model cannot meet the target below `k_max`.
    pub k: Option<u64>,
    pub predicted_wait: Option<f64>,
    pub non_monotone: bool,
}

/// One row per analytic model, plus an exponential-setup row found by
/// simulation when `exp_search` is given; sorted by `k`, unachievable last.
pub fn provisioning_table(
    target_wait: f64,
    rho: f64,
    mu: f64,
    beta: f64,
    opts: &ProvisionOptions,
    exp_search: Option<(&SimBudget, &SimBudget)>,
) -> Result<Vec<ProvisionRow>, ProvisionError> {
    let mut rows = Vec::new();
    for model in ProvisionModel::ALL {
        match min_servers_for_wait(target_wait, rho, mu, beta, model, opts) {
            Ok(r) => rows.push(ProvisionRow {
                model: r.model,
                k: Some(r.k),
                predicted_wait: Some(r.predicted_wait),
                non_monotone: r.non_monotone,
            }),
            Err(ProvisionError::Unachievable { model, .. }) => {
                rows.push(ProvisionRow { model, k: None, predicted_wait: None, non_monotone: false })
            }
            Err(e) => return Err(e),
        }
    }
    if let Some((coarse, fine)) = exp_search {
        match min_servers_exponential_sim(target_wait, rho, mu, beta, opts.k_max, coarse, fine) {
            Ok((k, est)) => rows.push(ProvisionRow {
                model: "exponential-sim",
                k: Some(k),
                predicted_wait: Some(est.mean),
                non_monotone: false,
            }),
            Err(ProvisionError::Unachievable { .. }) => {
                rows.push(ProvisionRow { model: "exponential-sim", k: None, predicted_wait: None, non_monotone: false })
            }
            Err(e) => return Err(e),
        }
    }
    rows.sort_by_key(|r| r.k.unwrap_or(u64::MAX));
    Ok(rows)
}
