//! Parameter and policy types shared by the analytics and the simulator.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("ZeroServers: k must be at least 1")]
    ZeroServers,
    #[error("UnstableLoad: rho must lie strictly inside (0, 1), got {0}")]
    UnstableLoad(f64),
    #[error("NonPositiveRate: mu must be a positive finite rate, got {0}")]
    NonPositiveRate(f64),
    #[error("NegativeSetup: beta must be a non-negative finite time, got {0}")]
    NegativeSetup(f64),
    #[error("BufferExceedsServers: buffer m = {m} exceeds the server count k = {k}")]
    BufferExceedsServers { m: u64, k: u64 },
    #[error("NonPositiveSetupMean: mean setup time must be positive and finite, got {0}")]
    NonPositiveSetupMean(f64),
}

/// System parameters in canonical form `(k, rho, mu, beta)`.
///
/// The offered load `R = k rho`, the per-server arrival rate `lambda = mu rho`
/// and the total arrival rate `Lambda = mu R` are computed once on
/// construction. Fields are private so the derived values cannot go stale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams<T> {
    k: u64,
    rho: T,
    mu: T,
    beta: T,
    offered_load: T,
    lambda: T,
    total_arrival_rate: T,
}

impl<T: Scalar> SystemParams<T> {
    pub fn new(k: u64, rho: T, mu: T, beta: T) -> Result<Self, ModelError> {
        if k < 1 {
            return Err(ModelError::ZeroServers);
        }
        // Written so that NaN fails every check.
        if !(mu > T::zero() && mu.is_finite()) {
            return Err(ModelError::NonPositiveRate(to_f64(mu)));
        }
        if !(rho > T::zero() && rho < T::one()) {
            return Err(ModelError::UnstableLoad(to_f64(rho)));
        }
        if !(beta >= T::zero() && beta.is_finite()) {
            return Err(ModelError::NegativeSetup(to_f64(beta)));
        }
        let offered_load = T::from_count(k) * rho;
        Ok(Self { k, rho, mu, beta, offered_load, lambda: mu * rho, total_arrival_rate: mu * offered_load })
    }

    /// Builds parameters from the total arrival rate `Lambda = k lambda`.
    pub fn from_arrival_rate(k: u64, total_rate: T, mu: T, beta: T) -> Result<Self, ModelError> {
        if k < 1 {
            return Err(ModelError::ZeroServers);
        }
        if !(mu > T::zero() && mu.is_finite()) {
            return Err(ModelError::NonPositiveRate(to_f64(mu)));
        }
        Self::new(k, total_rate / (T::from_count(k) * mu), mu, beta)
    }

    /// Re-checks the raw fields and recomputes the derived ones.
    pub fn validate(&self) -> Result<Self, ModelError> {
        Self::new(self.k, self.rho, self.mu, self.beta)
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// `R = k rho`, the mean number of busy servers.
    pub fn offered_load(&self) -> T {
        self.offered_load
    }

    /// Per-server arrival rate `lambda = mu rho`.
    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Total arrival rate `k lambda = mu R`.
    pub fn total_arrival_rate(&self) -> T {
        self.total_arrival_rate
    }

    /// Setup time measured in mean service times, `mu beta`.
    pub fn relative_setup(&self) -> T {
        self.mu * self.beta
    }

    pub fn with_k(&self, k: u64) -> Result<Self, ModelError> {
        Self::new(k, self.rho, self.mu, self.beta)
    }

    pub fn with_rho(&self, rho: T) -> Result<Self, ModelError> {
        Self::new(self.k, rho, self.mu, self.beta)
    }

    pub fn with_beta(&self, beta: T) -> Result<Self, ModelError> {
        Self::new(self.k, self.rho, self.mu, beta)
    }

    pub fn with_mu(&self, mu: T) -> Result<Self, ModelError> {
        Self::new(self.k, self.rho, mu, self.beta)
    }
}

fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Thresholds under which the bounds are proven. Analytics are evaluated
/// everywhere; this only decides the `in_region` flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionRegion<T> {
    pub min_offered_load: T,
    pub min_relative_setup: T,
}

impl<T: Scalar> Default for AssumptionRegion<T> {
    fn default() -> Self {
        Self { min_offered_load: T::lit(100.0), min_relative_setup: T::lit(100.0) }
    }
}

impl<T: Scalar> AssumptionRegion<T> {
    pub fn contains(&self, params: &SystemParams<T>) -> bool {
        params.offered_load() >= self.min_offered_load && params.relative_setup() >= self.min_relative_setup
    }
}

pub fn in_assumption_region<T: Scalar>(params: &SystemParams<T>, region: &AssumptionRegion<T>) -> bool {
    region.contains(params)
}

/// On/off discipline for the servers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetupPolicy {
    /// Setup lasts exactly `beta`. Server `i` turns off when the number of
    /// jobs drops from `i - buffer` to `i - buffer - 1`; `buffer = 0` is the
    /// base policy.
    DeterministicSetup { buffer: u64 },
    /// Base on/off rule with `Exp(mean_setup)` setup durations.
    ExponentialSetup { mean_setup: f64 },
    /// All `k` servers are always on.
    NoSetup,
}

impl SetupPolicy {
    pub const BASE: SetupPolicy = SetupPolicy::DeterministicSetup { buffer: 0 };

    pub fn check<T: Scalar>(&self, params: &SystemParams<T>) -> Result<(), ModelError> {
        match *self {
            SetupPolicy::DeterministicSetup { buffer } if buffer > params.k() => {
                Err(ModelError::BufferExceedsServers { m: buffer, k: params.k() })
            }
            SetupPolicy::ExponentialSetup { mean_setup } if !(mean_setup > 0.0 && mean_setup.is_finite()) => {
                Err(ModelError::NonPositiveSetupMean(mean_setup))
            }
            _ => Ok(()),
        }
    }

    /// Short stable label used in CSV output.
    pub fn label(&self) -> String {
        match *self {
            SetupPolicy::DeterministicSetup { buffer: 0 } => "deterministic".to_string(),
            SetupPolicy::DeterministicSetup { buffer } => format!("deterministic-m{buffer}"),
            SetupPolicy::ExponentialSetup { .. } => "exponential".to_string(),
            SetupPolicy::NoSetup => "no-setup".to_string(),
        }
    }
}
