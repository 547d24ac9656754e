//! Samplers for the random walks and birth-death processes behind the
//! hitting-time claims, plus the exact Poisson-mixture tail they should match.
//!
//! Samples are drawn in fixed-size chunks, chunk `i` on stream `i` of the
//! seed, so the output does not depend on how rayon schedules the chunks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::analytic::symmetric_survival;

const CHUNK: usize = 1 << 14;

fn chunked<T: Send>(n: usize, seed: u64, f: impl Fn(&mut ChaCha8Rng, usize) -> Vec<T> + Sync) -> Vec<T> {
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let len = CHUNK.min(n - i * CHUNK);
            f(&mut rng, len)
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Busy periods of an M/M/1 started with one job, arrival and service rate
/// both `rate`, observed up to `cap`. Returns `min(tau, cap)` per sample.
pub fn critical_busy_periods(rate: f64, cap: f64, n: usize, seed: u64) -> Vec<f64> {
    chunked(n, seed, |rng, len| {
        let step_rate = 2.0 * rate;
        (0..len)
            .map(|_| {
                let mut level = 1u64;
                let mut t = 0.0;
                loop {
                    t += rng.sample::<f64, _>(Exp1) / step_rate;
                    if t >= cap {
                        return cap;
                    }
                    if rng.random::<bool>() {
                        level += 1;
                    } else {
                        level -= 1;
                        if level == 0 {
                            return t;
                        }
                    }
                }
            })
            .collect()
    })
}

/// `P(gamma > n)` for the symmetric `+-1` walk started at 1.
fn symmetric_walk_survival(n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    // gamma is odd, so P(gamma > 2m) = P(gamma > 2m - 1).
    symmetric_survival((n - 1) / 2)
}

/// Exact `P(tau > t)` for the critically loaded M/M/1 busy period started
/// with one job, as a function of the expected step count `nu = 2 rate t`:
/// the walk survival mixed over a Poisson(nu) number of steps.
pub fn critical_busy_tail_exact(nu: f64) -> f64 {
    if nu <= 0.0 {
        return 1.0;
    }
    let top = (nu + 40.0 * nu.sqrt() + 100.0) as u64;
    let ln_nu = nu.ln();
    (0..=top)
        .map(|n| {
            let ln_pois = -nu + n as f64 * ln_nu - ln_gamma(n as f64 + 1.0);
            ln_pois.exp() * symmetric_walk_survival(n)
        })
        .sum()
}

/// Discrete `+-1` walk from 1 with up-probability `p`; returns for each
/// sample whether it hit 0 within `max_steps` steps.
pub fn walk_absorbed_within(p: f64, max_steps: u64, n: usize, seed: u64) -> Vec<bool> {
    chunked(n, seed, |rng, len| {
        (0..len)
            .map(|_| {
                let mut level = 1u64;
                for _ in 0..max_steps {
                    if rng.random::<f64>() < p {
                        level += 1;
                    } else {
                        level -= 1;
                        if level == 0 {
                            return true;
                        }
                    }
                }
                false
            })
            .collect()
    })
}

/// One M/M/1 busy period started with `n0` jobs: `(length, int N dt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusyPeriodSample {
    pub length: f64,
    pub jobs_integral: f64,
}

pub fn mm1_busy_periods(arrival_rate: f64, service_rate: f64, n0: u64, n: usize, seed: u64) -> Vec<BusyPeriodSample> {
    chunked(n, seed, |rng, len| {
        let total = arrival_rate + service_rate;
        let p_up = arrival_rate / total;
        (0..len)
            .map(|_| {
                let mut jobs = n0;
                let mut s = BusyPeriodSample { length: 0.0, jobs_integral: 0.0 };
                while jobs > 0 {
                    let dt = rng.sample::<f64, _>(Exp1) / total;
                    s.length += dt;
                    s.jobs_integral += dt * jobs as f64;
                    if rng.random::<f64>() < p_up {
                        jobs += 1;
                    } else {
                        jobs -= 1;
                    }
                }
                s
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_tail_limits() {
        assert_eq!(critical_busy_tail_exact(0.0), 1.0);
        // Large nu: P(tau > t) ~ sqrt(2 / (pi nu)).
        let nu = 1e5;
        let approx = (2.0 / (std::f64::consts::PI * nu)).sqrt();
        assert!((critical_busy_tail_exact(nu) / approx - 1.0).abs() < 1e-3);
    }

    #[test]
    fn sampled_tail_matches_exact() {
        let rate = 50.0;
        let samples = critical_busy_periods(rate, 1.0, 200_000, 3);
        for t in [0.01, 0.05, 0.2, 0.9] {
            let p = samples.iter().filter(|&&x| x > t).count() as f64 / samples.len() as f64;
            let exact = critical_busy_tail_exact(2.0 * rate * t);
            let sd = (exact * (1.0 - exact) / samples.len() as f64).sqrt();
            assert!((p - exact).abs() < 4.0 * sd, "t={t}: {p} vs {exact}");
        }
    }

    #[test]
    fn chunking_is_deterministic() {
        let a = critical_busy_periods(5.0, 3.0, CHUNK * 2 + 17, 9);
        let b = critical_busy_periods(5.0, 3.0, CHUNK * 2 + 17, 9);
        assert_eq!(a, b);
        assert_eq!(a.len(), CHUNK * 2 + 17);
    }

    #[test]
    fn mm1_busy_period_mean_length() {
        let s = mm1_busy_periods(1.0, 2.0, 1, 100_000, 4);
        let mean = s.iter().map(|b| b.length).sum::<f64>() / s.len() as f64;
        assert!((mean - 1.0).abs() < 0.03, "{mean}");
    }
}
