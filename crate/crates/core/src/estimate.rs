//! Independent replications and their confidence intervals.
//!
//! Replications run in parallel on the current rayon pool, each on its own
//! random stream, and are merged in replication-index order, so results are
//! bitwise identical whatever the thread count.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::model::{SetupPolicy, SystemParams};
use crate::sim::{self, CycleStats, ReplicationResult, SimConfig, SimError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("InsufficientReplications: need at least 2, got {0}")]
    InsufficientReplications(usize),
    #[error("ZeroReference: relative error needs a positive reference, got {0}")]
    ZeroReference(f64),
    #[error("mismatched sample and weight lengths")]
    LengthMismatch,
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    MeanQueueLength,
    MeanWait,
    MeanCycleLength,
    MeanAccumulationTime,
    MeanFirstLongEpoch,
    /// `E[N(T_A) - R]`.
    MeanNTA,
    /// `E[(N(T_A) - R)^2]`.
    SecondMomentNTA,
    /// Any other sample mean, e.g. a Monte-Carlo probability.
    Other,
}

/// A sample mean with a 95% Student-t half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub quantity: Quantity,
    pub mean: f64,
    pub ci_half_width: f64,
    /// Independent samples behind the estimate: replications or cycles.
    pub n_replications: usize,
    pub total_events: u64,
}

impl SimEstimate {
    pub fn upper(&self) -> f64 {
        self.mean + self.ci_half_width
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci_half_width
    }

    pub fn covers(&self, value: f64) -> bool {
        self.lower() <= value && value <= self.upper()
    }

    /// Standard error implied by the half-width.
    pub fn std_error(&self) -> f64 {
        self.ci_half_width / t_quantile(self.n_replications)
    }
}

/// Two-sided 95% Student-t quantile with `n - 1` degrees of freedom.
pub fn t_quantile(n: usize) -> f64 {
    if n < 2 {
        return f64::INFINITY;
    }
    StudentsT::new(0.0, 1.0, (n - 1) as f64).map(|t| t.inverse_cdf(0.975)).unwrap_or(f64::INFINITY)
}

/// Weighted mean and 95% half-width of i.i.d. samples. Weights are
/// normalised to mean one, so equal weights give the textbook interval.
pub fn summarize_weighted(
    quantity: Quantity,
    values: &[f64],
    weights: &[f64],
    total_events: u64,
) -> Result<SimEstimate, EstimateError> {
    let n = values.len();
    if weights.len() != n {
        return Err(EstimateError::LengthMismatch);
    }
    if n < 2 {
        return Err(EstimateError::InsufficientReplications(n));
    }
    let total_weight: f64 = weights.iter().sum();
    let mean = values.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() / total_weight;
    let var = values.iter().zip(weights).map(|(x, w)| w * (x - mean).powi(2)).sum::<f64>() / total_weight * n as f64
        / (n - 1) as f64;
    Ok(SimEstimate {
        quantity,
        mean,
        ci_half_width: t_quantile(n) * (var / n as f64).sqrt(),
        n_replications: n,
        total_events,
    })
}

pub fn summarize(quantity: Quantity, values: &[f64], total_events: u64) -> Result<SimEstimate, EstimateError> {
    summarize_weighted(quantity, values, &vec![1.0; values.len()], total_events)
}

/// Per-replication check of `E[Q] = Lambda E[T_Q]`, using each
/// replication's observed arrival rate in its window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LittleCheck {
    /// Mean of `Q_r - (arrivals_r / window_r) * W_r`.
    pub difference: f64,
    pub ci_half_width: f64,
    /// Allowance for jobs straddling the window edges, relative to `E[Q]`.
    pub edge_tolerance: f64,
}

impl LittleCheck {
    pub fn consistent(&self) -> bool {
        self.difference.abs() <= self.ci_half_width + self.edge_tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatePair {
    pub queue_length: SimEstimate,
    pub wait: SimEstimate,
    pub little: LittleCheck,
    pub replications: Vec<ReplicationResult>,
}

/// Runs `n_replications` replications with streams `0..n` of `base_cfg.seed`.
pub fn run_replications(
    params: &SystemParams<f64>,
    policy: &SetupPolicy,
    base_cfg: &SimConfig,
    n_replications: usize,
) -> Result<Vec<ReplicationResult>, EstimateError> {
    if n_replications < 2 {
        return Err(EstimateError::InsufficientReplications(n_replications));
    }
    let results: Result<Vec<_>, SimError> = (0..n_replications as u64)
        .into_par_iter()
        .map(|r| sim::run_replication(params, policy, &base_cfg.clone().replication(r)))
        .collect();
    Ok(results?)
}

pub fn estimate(
    params: &SystemParams<f64>,
    policy: &SetupPolicy,
    base_cfg: &SimConfig,
    n_replications: usize,
) -> Result<EstimatePair, EstimateError> {
    let reps = run_replications(params, policy, base_cfg, n_replications)?;
    merge(reps)
}

/// Combines replication results in replication-index order.
pub fn merge(mut reps: Vec<ReplicationResult>) -> Result<EstimatePair, EstimateError> {
    reps.sort_by_key(|r| r.replication_index);
    let weights: Vec<f64> = reps.iter().map(|r| r.window_length).collect();
    let events: u64 = reps.iter().map(|r| r.events).sum();
    let q: Vec<f64> = reps.iter().map(|r| r.mean_queue_length).collect();
    let w: Vec<f64> = reps.iter().map(|r| r.mean_wait).collect();
    let d: Vec<f64> = reps.iter().map(|r| r.mean_queue_length - r.window_arrival_rate() * r.mean_wait).collect();
    let queue_length = summarize_weighted(Quantity::MeanQueueLength, &q, &weights, events)?;
    let wait = summarize_weighted(Quantity::MeanWait, &w, &weights, events)?;
    let diff = summarize_weighted(Quantity::Other, &d, &weights, events)?;
    let little = LittleCheck {
        difference: diff.mean,
        ci_half_width: diff.ci_half_width,
        edge_tolerance: 0.01 * queue_length.mean.abs(),
    };
    Ok(EstimatePair { queue_length, wait, little, replications: reps })
}

/// Treats each renewal cycle as one i.i.d. sample of the chosen quantity.
pub fn estimate_cycles(
    stats: &CycleStats,
    quantity: Quantity,
    offered_load: f64,
) -> Result<SimEstimate, EstimateError> {
    let values: Vec<f64> = stats
        .cycles
        .iter()
        .map(|c| match quantity {
            Quantity::MeanCycleLength => c.length,
            Quantity::MeanAccumulationTime => c.accumulation_time,
            Quantity::MeanFirstLongEpoch => c.first_long_epoch as f64,
            Quantity::MeanNTA => c.jobs_at_accumulation as f64 - offered_load,
            Quantity::SecondMomentNTA => (c.jobs_at_accumulation as f64 - offered_load).powi(2),
            Quantity::MeanQueueLength | Quantity::MeanWait | Quantity::Other => f64::NAN,
        })
        .collect();
    summarize(quantity, &values, stats.events)
}

pub fn relative_error(estimate: &SimEstimate, reference: f64) -> Result<f64, EstimateError> {
    if !(reference > 0.0) {
        return Err(EstimateError::ZeroReference(reference));
    }
    Ok((estimate.mean - reference).abs() / reference)
}
