use std::collections::VecDeque;
use std::fmt;

use super::{OnOffRule, SimError};
use crate::model::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Arrival,
    Departure,
    SetupComplete,
    SetupCancel,
    ServerOff,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Arrival => "Arrival",
            EventKind::Departure => "Departure",
            EventKind::SetupComplete => "SetupComplete",
            EventKind::SetupCancel => "SetupCancel",
            EventKind::ServerOff => "ServerOff",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// System state right after one event. A departure that also cancels a setup
/// or turns a server off is followed by a second record at the same time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub n_jobs: u64,
    pub n_busy: u64,
    pub n_setup: u64,
    /// Servers that are on, busy or idle. Equals `n_busy` under the base rule.
    pub n_on: u64,
}

impl EventRecord {
    /// `time,kind,n_jobs,n_busy,n_setup` with the time at 17 significant digits.
    pub fn to_csv_line(&self) -> String {
        format!("{:.16e},{},{},{},{}", self.time, self.kind, self.n_jobs, self.n_busy, self.n_setup)
    }
}

/// One line per record, no header.
pub fn trace_to_csv(records: &[EventRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 48);
    for r in records {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// Checks every event epoch of a trace against the state invariants of the
/// given on/off rule.
///
/// For the base rule with deterministic setup `beta` this includes the sample
/// path identity `n_busy(t) = min(k, min_{s in [t - beta, t]} N(s))`.
/// Invariants are evaluated at the last record of each group sharing a
/// timestamp, since a departure and the setup cancel it triggers are
/// recorded separately. `deterministic_beta` is `None` for exponential setup.
pub fn assert_sample_path_invariants(
    trace: &[EventRecord],
    params: &SystemParams<f64>,
    rule: OnOffRule,
    deterministic_beta: Option<f64>,
) -> Result<(), SimError> {
    let k = params.k();
    let violation =
        |index: usize, what: &'static str| SimError::InvariantViolation { index, record: trace[index], what };

    // Sliding-window minimum of N over [t - beta, t]: `anchor` is the last
    // record at or before t - beta (None while the window still reaches back
    // to the empty initial state), `minima` a monotone deque of indices.
    let mut minima: VecDeque<usize> = VecDeque::new();
    let mut anchor: Option<usize> = None;

    for i in 0..trace.len() {
        let rec = &trace[i];
        if i > 0 && rec.time < trace[i - 1].time {
            return Err(violation(i, "time went backwards"));
        }
        while let Some(&j) = minima.back() {
            if trace[j].n_jobs >= rec.n_jobs {
                minima.pop_back();
            } else {
                break;
            }
        }
        minima.push_back(i);

        let last_at_time = i + 1 == trace.len() || trace[i + 1].time != rec.time;
        if !last_at_time {
            continue;
        }

        if rec.n_busy > rec.n_jobs || rec.n_busy > k {
            return Err(violation(i, "more busy servers than jobs or servers"));
        }
        if rec.n_on < rec.n_busy || rec.n_on + rec.n_setup > k {
            return Err(violation(i, "server counts exceed k"));
        }
        if rec.n_busy != rec.n_on.min(rec.n_jobs) {
            return Err(violation(i, "an on server idles while jobs wait"));
        }

        match rule {
            OnOffRule::Base => {
                if rec.n_on != rec.n_busy {
                    return Err(violation(i, "idle on server under the base rule"));
                }
                if rec.n_busy + rec.n_setup != k.min(rec.n_jobs) {
                    return Err(violation(i, "busy plus setup differs from min(k, N)"));
                }
                if let Some(beta) = deterministic_beta {
                    // A setup started at s completes at s + beta up to
                    // rounding, so the cutoff leans slightly forward.
                    let cutoff = rec.time - beta + 1e-12 * rec.time.abs().max(1.0);
                    while anchor.map_or(0, |a| a + 1) <= i && trace[anchor.map_or(0, |a| a + 1)].time <= cutoff {
                        anchor = Some(anchor.map_or(0, |a| a + 1));
                    }
                    let first = anchor.unwrap_or(0);
                    while minima.front().is_some_and(|&j| j < first) {
                        minima.pop_front();
                    }
                    let mut window_min = minima.front().map_or(u64::MAX, |&j| trace[j].n_jobs);
                    match anchor {
                        // Popped anchors were dominated by a later smaller value.
                        Some(a) => window_min = window_min.min(trace[a].n_jobs),
                        None => window_min = 0,
                    }
                    let expected = k.min(window_min);
                    if rec.n_busy != expected {
                        return Err(violation(i, "busy servers differ from the beta-window minimum of N"));
                    }
                }
            }
            OnOffRule::Buffered(m) => {
                if rec.n_on + rec.n_setup > k.min(rec.n_jobs + m) {
                    return Err(violation(i, "more servers on or in setup than min(k, N + m)"));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(time: f64, kind: EventKind, n_jobs: u64, n_busy: u64, n_setup: u64) -> EventRecord {
        EventRecord { time, kind, n_jobs, n_busy, n_setup, n_on: n_busy }
    }

    #[test]
    fn forged_busy_count_is_caught() {
        let params = SystemParams::new(5, 0.5, 1.0, 1.0).unwrap();
        let mut trace = vec![
            rec(0.1, EventKind::Arrival, 1, 0, 1),
            rec(0.3, EventKind::Arrival, 2, 0, 2),
            rec(1.1, EventKind::SetupComplete, 2, 1, 1),
            rec(1.2, EventKind::Departure, 1, 1, 1),
            rec(1.2, EventKind::SetupCancel, 1, 1, 0),
        ];
        assert!(assert_sample_path_invariants(&trace, &params, OnOffRule::Base, Some(1.0)).is_ok());
        trace[3].n_busy = 0;
        trace[3].n_on = 0;
        trace.remove(4);
        match assert_sample_path_invariants(&trace, &params, OnOffRule::Base, Some(1.0)) {
            Err(SimError::InvariantViolation { index, .. }) => assert_eq!(index, 3),
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn window_identity_requires_full_setup() {
        let params = SystemParams::new(5, 0.5, 1.0, 1.0).unwrap();
        // A server claims to be busy only half a setup after the arrival.
        let trace = vec![rec(0.1, EventKind::Arrival, 1, 0, 1), rec(0.6, EventKind::SetupComplete, 1, 1, 0)];
        assert!(assert_sample_path_invariants(&trace, &params, OnOffRule::Base, Some(1.0)).is_err());
    }

    #[test]
    fn csv_line_format() {
        let line = rec(1.5, EventKind::SetupComplete, 3, 2, 1).to_csv_line();
        assert_eq!(line, "1.5000000000000000e0,SetupComplete,3,2,1");
        let t: f64 = line.split(',').next().unwrap().parse().unwrap();
        assert_eq!(t, 1.5);
    }
}
