use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::trace::{EventKind, EventRecord};
use super::{OnOffRule, SetupDuration, SimError};

/// Whether the run should continue after an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Receives every event record as it happens.
pub trait Observer {
    fn observe(&mut self, record: &EventRecord) -> Flow;
}

pub struct NullObserver;

impl Observer for NullObserver {
    #[inline]
    fn observe(&mut self, _: &EventRecord) -> Flow {
        Flow::Continue
    }
}

pub struct TraceRecorder(pub Vec<EventRecord>);

impl Observer for TraceRecorder {
    fn observe(&mut self, record: &EventRecord) -> Flow {
        self.0.push(*record);
        Flow::Continue
    }
}

/// Running state of one sample path.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub now: f64,
    /// `N(t)`, jobs in the system.
    pub n_jobs: u64,
    /// `Z(t)`, busy servers.
    pub n_busy: u64,
    /// `S(t)`, servers in setup.
    pub n_setup: u64,
    /// Servers that are on; `n_on - n_busy` are idle.
    pub n_on: u64,
    pub arrivals_seen: u64,
    pub departures_seen: u64,
    pub events: u64,
    /// `int Q dt` over the measurement window.
    pub q_time_integral: f64,
    /// `int N dt` over the measurement window.
    pub n_time_integral: f64,
    pub wait_sum: f64,
    pub wait_count: u64,
    pub window_arrivals: u64,
}

impl SimState {
    fn empty() -> Self {
        Self {
            now: 0.0,
            n_jobs: 0,
            n_busy: 0,
            n_setup: 0,
            n_on: 0,
            arrivals_seen: 0,
            departures_seen: 0,
            events: 0,
            q_time_integral: 0.0,
            n_time_integral: 0.0,
            wait_sum: 0.0,
            wait_count: 0,
            window_arrivals: 0,
        }
    }

    pub fn queue_length(&self) -> u64 {
        self.n_jobs - self.n_busy
    }
}

pub(crate) struct Engine {
    k: u64,
    arrival_rate: f64,
    mu: f64,
    setup: SetupDuration,
    rule: OnOffRule,
    warmup: f64,
    max_events: u64,
    state: SimState,
    /// Arrival times of queued jobs, oldest first.
    waiting: VecDeque<f64>,
    /// Completion times of deterministic setups in start order; cancellation
    /// always removes the most recently started one from the back.
    setup_completions: VecDeque<f64>,
    rng: ChaCha8Rng,
}

impl Engine {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        k: u64,
        arrival_rate: f64,
        mu: f64,
        setup: SetupDuration,
        rule: OnOffRule,
        warmup: f64,
        max_events: u64,
        rng: ChaCha8Rng,
    ) -> Self {
        let mut state = SimState::empty();
        if setup == SetupDuration::None {
            state.n_on = k;
        }
        Self {
            k,
            arrival_rate,
            mu,
            setup,
            rule,
            warmup,
            max_events,
            state,
            waiting: VecDeque::new(),
            setup_completions: VecDeque::new(),
            rng,
        }
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn setup_completions(&self) -> &VecDeque<f64> {
        &self.setup_completions
    }

    /// Runs until `horizon` or until the observer stops the run.
    pub fn run<O: Observer>(&mut self, horizon: f64, observer: &mut O) -> Result<(), SimError> {
        loop {
            if self.state.events >= self.max_events {
                return Err(SimError::EventCapExceeded(self.max_events));
            }
            let exp_setup_rate = match self.setup {
                SetupDuration::Exponential(mean) => self.state.n_setup as f64 / mean,
                _ => 0.0,
            };
            let busy_rate = self.mu * self.state.n_busy as f64;
            let markov_rate = self.arrival_rate + busy_rate + exp_setup_rate;
            let gap: f64 = self.rng.sample::<f64, _>(Exp1) / markov_rate;
            let t_markov = self.state.now + gap;
            let t_setup = self.setup_completions.front().copied().unwrap_or(f64::INFINITY);

            let t_next = t_markov.min(t_setup);
            if !t_next.is_finite() {
                return Err(SimError::NonFiniteTime(self.state.now));
            }
            if t_next > horizon {
                self.advance(horizon);
                return Ok(());
            }
            self.advance(t_next);
            self.state.events += 1;

            let flow = if t_setup <= t_markov {
                self.setup_completions.pop_front();
                self.complete_setup(observer)
            } else {
                let u = self.rng.random::<f64>() * markov_rate;
                if u < self.arrival_rate {
                    self.arrival(observer)
                } else if u < self.arrival_rate + busy_rate {
                    self.departure(observer)
                } else {
                    self.complete_setup(observer)
                }
            };
            if flow == Flow::Stop {
                return Ok(());
            }
        }
    }

    fn advance(&mut self, t: f64) {
        let from = self.state.now.max(self.warmup);
        if t > from {
            let dt = t - from;
            self.state.q_time_integral += dt * (self.state.n_jobs - self.state.n_busy) as f64;
            self.state.n_time_integral += dt * self.state.n_jobs as f64;
        }
        self.state.now = t;
    }

    fn record(&self, kind: EventKind) -> EventRecord {
        EventRecord {
            time: self.state.now,
            kind,
            n_jobs: self.state.n_jobs,
            n_busy: self.state.n_busy,
            n_setup: self.state.n_setup,
            n_on: self.state.n_on,
        }
    }

    fn start_service(&mut self, arrived: f64) {
        if arrived >= self.warmup {
            self.state.wait_sum += self.state.now - arrived;
            self.state.wait_count += 1;
        }
    }

    fn start_setup(&mut self) {
        self.state.n_setup += 1;
        if let SetupDuration::Deterministic(beta) = self.setup {
            self.setup_completions.push_back(self.state.now + beta);
        }
    }

    fn cancel_setup(&mut self) {
        self.state.n_setup -= 1;
        if let SetupDuration::Deterministic(_) = self.setup {
            self.setup_completions.pop_back();
        }
    }

    fn arrival<O: Observer>(&mut self, observer: &mut O) -> Flow {
        let now = self.state.now;
        self.state.arrivals_seen += 1;
        if now >= self.warmup {
            self.state.window_arrivals += 1;
        }
        self.state.n_jobs += 1;
        if self.state.n_on > self.state.n_busy {
            self.state.n_busy += 1;
            self.start_service(now);
        } else {
            self.waiting.push_back(now);
        }
        if self.setup != SetupDuration::None {
            match self.rule {
                OnOffRule::Base => {
                    if self.state.n_jobs <= self.k {
                        self.start_setup();
                    }
                }
                OnOffRule::Buffered(m) => {
                    let target = self.k.min(self.state.n_jobs + m);
                    while self.state.n_on + self.state.n_setup < target {
                        self.start_setup();
                    }
                }
            }
        }
        observer.observe(&self.record(EventKind::Arrival))
    }

    fn departure<O: Observer>(&mut self, observer: &mut O) -> Flow {
        self.state.departures_seen += 1;
        self.state.n_jobs -= 1;
        let served_next = match self.waiting.pop_front() {
            Some(arrived) => {
                self.start_service(arrived);
                true
            }
            None => {
                self.state.n_busy -= 1;
                false
            }
        };
        if observer.observe(&self.record(EventKind::Departure)) == Flow::Stop {
            return Flow::Stop;
        }
        if self.setup == SetupDuration::None {
            return Flow::Continue;
        }
        match self.rule {
            OnOffRule::Base => {
                if served_next {
                    // N fell from n to n - 1 with n <= k: one setup is surplus.
                    if self.state.n_jobs < self.k {
                        self.cancel_setup();
                        return observer.observe(&self.record(EventKind::SetupCancel));
                    }
                    Flow::Continue
                } else {
                    self.state.n_on -= 1;
                    observer.observe(&self.record(EventKind::ServerOff))
                }
            }
            OnOffRule::Buffered(m) => {
                let target = self.k.min(self.state.n_jobs + m);
                while self.state.n_on + self.state.n_setup > target {
                    let kind = if self.state.n_setup > 0 {
                        self.cancel_setup();
                        EventKind::SetupCancel
                    } else {
                        self.state.n_on -= 1;
                        EventKind::ServerOff
                    };
                    if observer.observe(&self.record(kind)) == Flow::Stop {
                        return Flow::Stop;
                    }
                }
                Flow::Continue
            }
        }
    }

    fn complete_setup<O: Observer>(&mut self, observer: &mut O) -> Flow {
        self.state.n_setup -= 1;
        self.state.n_on += 1;
        if let Some(arrived) = self.waiting.pop_front() {
            self.state.n_busy += 1;
            self.start_service(arrived);
        }
        observer.observe(&self.record(EventKind::SetupComplete))
    }
}
