//! Renewal cycles of the base policy.
//!
//! With threshold `c = ceil(R)`, a renewal happens whenever the busy count
//! drops from `c + 1` to `c`. At that moment the system holds exactly `c`
//! jobs, all in service, with nothing in setup, so successive cycles are
//! i.i.d. Within a cycle the accumulation time `T_A` is the first moment the
//! `(c + 1)`-th server turns on. Epoch `j` starts at `tau_j`, the first time
//! `N <= c - j` (`tau_0` is the cycle start), and ends at
//! `min(tau_{j+1}, T_A)`; it is long if it lasts more than `beta`.

use super::engine::{Engine, Flow, Observer};
use super::trace::{EventKind, EventRecord};
use super::{OnOffRule, SetupDuration, SimConfig, SimError};
use crate::model::SystemParams;

/// Cycles longer than this multiple of `beta sqrt(R)` abort the run.
pub const DEFAULT_CYCLE_TIMEOUT: f64 = 1000.0;

/// Measurements of one renewal cycle. Times are relative to the cycle start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord {
    pub start: f64,
    pub length: f64,
    /// `T_A`.
    pub accumulation_time: f64,
    /// `N(T_A)`.
    pub jobs_at_accumulation: u64,
    /// `int (N - R) dt` over the cycle.
    pub excess_integral: f64,
    /// `int Q dt` over the cycle.
    pub queue_integral: f64,
    /// Index of the first epoch lasting more than `beta`.
    pub first_long_epoch: u64,
    /// Number of epochs that started before `T_A`.
    pub epochs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleStats {
    /// The busy-server threshold `c`.
    pub threshold: u64,
    pub cycles: Vec<CycleRecord>,
    pub events: u64,
}

impl CycleStats {
    fn mean_of(&self, f: impl Fn(&CycleRecord) -> f64) -> f64 {
        self.cycles.iter().map(f).sum::<f64>() / self.cycles.len() as f64
    }

    pub fn mean_length(&self) -> f64 {
        self.mean_of(|c| c.length)
    }

    pub fn mean_accumulation_time(&self) -> f64 {
        self.mean_of(|c| c.accumulation_time)
    }

    pub fn mean_first_long_epoch(&self) -> f64 {
        self.mean_of(|c| c.first_long_epoch as f64)
    }

    /// Renewal-reward estimate of the time-average queue length.
    pub fn queue_length_ratio(&self) -> f64 {
        self.cycles.iter().map(|c| c.queue_integral).sum::<f64>() / self.cycles.iter().map(|c| c.length).sum::<f64>()
    }
}

/// `ceil(R)`, with `R` within `1e-9` (relative) of an integer taken as that
/// integer so that e.g. `250 * 0.4` does not become 101.
pub fn cycle_threshold(offered_load: f64) -> u64 {
    let nearest = offered_load.round();
    if (offered_load - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        offered_load.ceil() as u64
    }
}

struct CycleObserver {
    threshold: u64,
    offered_load: f64,
    beta: f64,
    wanted: usize,
    timeout: f64,
    // Piecewise-constant state since the previous record.
    last_time: f64,
    last_jobs: u64,
    last_busy: u64,
    in_cycle: bool,
    cycle_start: f64,
    excess: f64,
    queue: f64,
    accumulated: Option<(f64, u64)>,
    epoch: u64,
    epoch_start: f64,
    first_long: Option<u64>,
    cycles: Vec<CycleRecord>,
    timed_out: bool,
}

impl CycleObserver {
    fn close_epoch(&mut self, now: f64) {
        if self.first_long.is_none() && now - self.epoch_start > self.beta {
            self.first_long = Some(self.epoch);
        }
    }

    fn start_cycle(&mut self, now: f64) {
        self.in_cycle = true;
        self.cycle_start = now;
        self.excess = 0.0;
        self.queue = 0.0;
        self.accumulated = None;
        self.epoch = 0;
        self.epoch_start = now;
        self.first_long = None;
    }
}

impl Observer for CycleObserver {
    fn observe(&mut self, r: &EventRecord) -> Flow {
        let dt = r.time - self.last_time;
        if self.in_cycle {
            self.excess += dt * (self.last_jobs as f64 - self.offered_load);
            self.queue += dt * (self.last_jobs - self.last_busy) as f64;
        }
        let renewal =
            r.kind == EventKind::Departure && self.last_busy == self.threshold + 1 && r.n_busy == self.threshold;
        self.last_time = r.time;
        self.last_jobs = r.n_jobs;
        self.last_busy = r.n_busy;

        if renewal {
            if self.in_cycle {
                let (ta, nta) = self.accumulated.expect("a renewal follows an accumulation point");
                self.cycles.push(CycleRecord {
                    start: self.cycle_start,
                    length: r.time - self.cycle_start,
                    accumulation_time: ta,
                    jobs_at_accumulation: nta,
                    excess_integral: self.excess,
                    queue_integral: self.queue,
                    first_long_epoch: self.first_long.expect("some epoch before T_A lasts beyond beta"),
                    epochs: self.epoch + 1,
                });
                if self.cycles.len() >= self.wanted {
                    return Flow::Stop;
                }
            }
            self.start_cycle(r.time);
            return Flow::Continue;
        }
        if !self.in_cycle {
            return Flow::Continue;
        }
        if r.time - self.cycle_start > self.timeout {
            self.timed_out = true;
            return Flow::Stop;
        }
        if self.accumulated.is_none() {
            if r.n_busy > self.threshold {
                self.close_epoch(r.time);
                self.accumulated = Some((r.time - self.cycle_start, r.n_jobs));
            } else if self.epoch < self.threshold && r.n_jobs + self.epoch < self.threshold {
                // N moves by one per event, so a new low starts exactly one epoch.
                self.close_epoch(r.time);
                self.epoch += 1;
                self.epoch_start = r.time;
            }
        }
        Flow::Continue
    }
}

/// Runs the base policy with deterministic setup until `n_cycles` complete
/// renewal cycles have been observed after the first renewal point.
/// `cfg.horizon` and `cfg.warmup` are not used; `cfg.max_events` still caps
/// the run.
pub fn run_renewal_cycles(
    params: &SystemParams<f64>,
    cfg: &SimConfig,
    n_cycles: usize,
) -> Result<CycleStats, SimError> {
    run_renewal_cycles_with_timeout(params, cfg, n_cycles, DEFAULT_CYCLE_TIMEOUT)
}

pub fn run_renewal_cycles_with_timeout(
    params: &SystemParams<f64>,
    cfg: &SimConfig,
    n_cycles: usize,
    timeout_multiple: f64,
) -> Result<CycleStats, SimError> {
    let offered_load = params.offered_load();
    if offered_load < 2.0 {
        return Err(SimError::InvalidConfig(format!("renewal cycles need R >= 2, got {offered_load}")));
    }
    let threshold = cycle_threshold(offered_load);
    if threshold >= params.k() {
        return Err(SimError::InvalidConfig(format!(
            "threshold {threshold} leaves no server above it (k = {})",
            params.k()
        )));
    }
    if !(params.beta() > 0.0) {
        return Err(SimError::InvalidConfig("renewal cycles need a positive setup time".into()));
    }
    if n_cycles == 0 || cfg.max_events == 0 {
        return Err(SimError::InvalidConfig("need at least one cycle and a positive event cap".into()));
    }
    let timeout = timeout_multiple * params.beta() * offered_load.sqrt();
    let mut observer = CycleObserver {
        threshold,
        offered_load,
        beta: params.beta(),
        wanted: n_cycles,
        timeout,
        last_time: 0.0,
        last_jobs: 0,
        last_busy: 0,
        in_cycle: false,
        cycle_start: 0.0,
        excess: 0.0,
        queue: 0.0,
        accumulated: None,
        epoch: 0,
        epoch_start: 0.0,
        first_long: None,
        cycles: Vec::with_capacity(n_cycles),
        timed_out: false,
    };
    let mut engine = Engine::new(
        params.k(),
        params.total_arrival_rate(),
        params.mu(),
        SetupDuration::Deterministic(params.beta()),
        OnOffRule::Base,
        f64::INFINITY,
        cfg.max_events,
        cfg.rng(),
    );
    engine.run(f64::INFINITY, &mut observer)?;
    if observer.timed_out {
        return Err(SimError::CycleTimeout(timeout));
    }
    Ok(CycleStats { threshold, cycles: observer.cycles, events: engine.state().events })
}
