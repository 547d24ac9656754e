//! Discrete-event simulation of the M/M/k with setup.
//!
//! Arrivals, departures and exponential setup completions share one
//! exponential race at the total rate, redrawn after every event. Deterministic
//! setup completions sit in a FIFO of completion times. A run is strictly
//! single-threaded and fully determined by `(seed, replication_index)`.

mod engine;
mod renewal;
mod trace;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use engine::{Flow, NullObserver, Observer, SimState, TraceRecorder};
pub use renewal::{
    cycle_threshold, run_renewal_cycles, run_renewal_cycles_with_timeout, CycleRecord, CycleStats,
    DEFAULT_CYCLE_TIMEOUT,
};
pub use trace::{assert_sample_path_invariants, trace_to_csv, EventKind, EventRecord};

use crate::model::{ModelError, SetupPolicy, SystemParams};
use engine::Engine;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("EventCapExceeded: more than {0} events")]
    EventCapExceeded(u64),
    #[error("NonFiniteTime: event clock became non-finite after t = {0}")]
    NonFiniteTime(f64),
    #[error("InvariantViolation at record {index} ({what}): {record:?}")]
    InvariantViolation { index: usize, record: EventRecord, what: &'static str },
    #[error("CycleTimeout: a renewal cycle exceeded {0} time units")]
    CycleTimeout(f64),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// When servers are switched on and off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnOffRule {
    /// One server per job up to `k`: a setup starts on every arrival that
    /// finds `N <= k`, and a departure cancels the newest setup or else turns
    /// the freed server off.
    Base,
    /// Server `i` turns on when an arrival raises `N` to `i - m` and turns off
    /// when a departure drops `N` below `i - m`, so up to `m` on servers may
    /// idle. `Buffered(0)` reproduces `Base`.
    Buffered(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetupDuration {
    Deterministic(f64),
    Exponential(f64),
    None,
}

fn dynamics(params: &SystemParams<f64>, policy: &SetupPolicy) -> (SetupDuration, OnOffRule) {
    match *policy {
        SetupPolicy::DeterministicSetup { buffer: 0 } => (SetupDuration::Deterministic(params.beta()), OnOffRule::Base),
        SetupPolicy::DeterministicSetup { buffer } => {
            (SetupDuration::Deterministic(params.beta()), OnOffRule::Buffered(buffer))
        }
        SetupPolicy::ExponentialSetup { mean_setup } => (SetupDuration::Exponential(mean_setup), OnOffRule::Base),
        SetupPolicy::NoSetup => (SetupDuration::None, OnOffRule::Base),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    pub warmup: f64,
    pub seed: u64,
    pub replication_index: u64,
    pub record_trace: bool,
    pub max_events: u64,
}

impl SimConfig {
    pub const DEFAULT_MAX_EVENTS: u64 = 20_000_000_000;

    pub fn new(horizon: f64, warmup: f64, seed: u64) -> Self {
        Self { horizon, warmup, seed, replication_index: 0, record_trace: false, max_events: Self::DEFAULT_MAX_EVENTS }
    }

    /// Config with the default warmup `max(10 beta, 100 / (mu (1 - rho)))`,
    /// long enough for both the setup transient and the queue relaxation.
    pub fn for_params(params: &SystemParams<f64>, horizon: f64, seed: u64) -> Self {
        Self::new(horizon, default_warmup(params), seed)
    }

    pub fn replication(mut self, index: u64) -> Self {
        self.replication_index = index;
        self
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    pub fn with_max_events(mut self, cap: u64) -> Self {
        self.max_events = cap;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.horizon > 0.0) {
            return Err(SimError::InvalidConfig(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.warmup >= 0.0 && self.warmup < self.horizon) {
            return Err(SimError::InvalidConfig(format!(
                "warmup must lie in [0, horizon), got {} with horizon {}",
                self.warmup, self.horizon
            )));
        }
        if self.max_events == 0 {
            return Err(SimError::InvalidConfig("max_events must be positive".into()));
        }
        Ok(())
    }

    /// The random stream of this replication: a ChaCha8 key from the seed
    /// and the replication index as stream id.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.replication_index);
        rng
    }
}

pub fn default_warmup(params: &SystemParams<f64>) -> f64 {
    (10.0 * params.beta()).max(100.0 / (params.mu() * (1.0 - params.rho())))
}

/// Outcome of one replication over `[0, horizon]`, measured on `[warmup, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub replication_index: u64,
    /// Time-average number of queued jobs over the window.
    pub mean_queue_length: f64,
    /// Time-average number of jobs in the system over the window.
    pub mean_jobs: f64,
    /// Mean wait of jobs that arrived in the window and began service by the horizon.
    pub mean_wait: f64,
    pub wait_samples: u64,
    pub window_length: f64,
    pub window_arrivals: u64,
    pub events: u64,
    pub final_state: SimState,
    pub trace: Option<Vec<EventRecord>>,
}

impl ReplicationResult {
    pub fn window_arrival_rate(&self) -> f64 {
        self.window_arrivals as f64 / self.window_length
    }
}

/// Simulates one replication starting empty with every server off.
pub fn run_replication(
    params: &SystemParams<f64>,
    policy: &SetupPolicy,
    cfg: &SimConfig,
) -> Result<ReplicationResult, SimError> {
    policy.check(params)?;
    let (setup, rule) = dynamics(params, policy);
    run_with_rule(params, setup, rule, cfg)
}

/// Like [`run_replication`] with the setup duration and on/off rule chosen
/// directly, e.g. `Buffered(0)` to compare against `Base`.
pub fn run_with_rule(
    params: &SystemParams<f64>,
    setup: SetupDuration,
    rule: OnOffRule,
    cfg: &SimConfig,
) -> Result<ReplicationResult, SimError> {
    cfg.validate()?;
    let mut engine = Engine::new(
        params.k(),
        params.total_arrival_rate(),
        params.mu(),
        setup,
        rule,
        cfg.warmup,
        cfg.max_events,
        cfg.rng(),
    );
    let trace = if cfg.record_trace {
        let mut recorder = TraceRecorder(Vec::new());
        engine.run(cfg.horizon, &mut recorder)?;
        Some(recorder.0)
    } else {
        engine.run(cfg.horizon, &mut NullObserver)?;
        None
    };
    let state = engine.state().clone();
    debug_assert!(engine
        .setup_completions()
        .iter()
        .zip(engine.setup_completions().iter().skip(1))
        .all(|(a, b)| a <= b));
    let window_length = cfg.horizon - cfg.warmup;
    Ok(ReplicationResult {
        replication_index: cfg.replication_index,
        mean_queue_length: state.q_time_integral / window_length,
        mean_jobs: state.n_time_integral / window_length,
        mean_wait: if state.wait_count > 0 { state.wait_sum / state.wait_count as f64 } else { 0.0 },
        wait_samples: state.wait_count,
        window_length,
        window_arrivals: state.window_arrivals,
        events: state.events,
        final_state: state,
        trace,
    })
}
