//! No-setup and single-server reference formulas.

use super::AnalyticError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErlangC<T> {
    /// Probability an arriving job has to wait.
    pub delay_probability: T,
    /// Mean time in queue.
    pub mean_wait: T,
}

/// Erlang-C delay probability and mean wait of an M/M/k without setup.
///
/// Uses the Erlang-B recursion `B(n) = a B(n-1) / (n + a B(n-1))` with offered
/// load `a = k rho`, then `C = B / (1 - rho (1 - B))`. Linear in `k`, no
/// factorials.
pub fn erlang_c<T: Scalar>(k: u64, rho: T, mu: T) -> Result<ErlangC<T>, AnalyticError> {
    if !(rho > T::zero() && rho < T::one()) {
        return Err(AnalyticError::UnstableLoad);
    }
    let a = T::from_count(k) * rho;
    let mut b = T::one();
    for n in 1..=k {
        let ab = a * b;
        b = ab / (T::from_count(n) + ab);
    }
    let c = b / (T::one() - rho * (T::one() - b));
    let service_capacity = T::from_count(k) * mu;
    Ok(ErlangC { delay_probability: c, mean_wait: c / (service_capacity - service_capacity * rho) })
}

pub fn erlang_c_wait<T: Scalar>(k: u64, rho: T, mu: T) -> Result<T, AnalyticError> {
    erlang_c(k, rho, mu).map(|e| e.mean_wait)
}

/// Mean wait in the M/M/1 with deterministic setup `beta`: the M/M/1 wait
/// plus the setup penalty `beta/2 (2 + lambda beta) / (1 + lambda beta)`.
pub fn welch_mm1_setup_wait<T: Scalar>(lambda: T, mu: T, beta: T) -> Result<T, AnalyticError> {
    if !(lambda > T::zero() && lambda < mu) {
        return Err(AnalyticError::UnstableLoad);
    }
    let mm1 = lambda / (mu * (mu - lambda));
    Ok(mm1 + setup_penalty(lambda, beta))
}

/// `beta/2 (2 + x beta) / (1 + x beta)`, zero at `beta = 0`.
pub(crate) fn setup_penalty<T: Scalar>(rate: T, beta: T) -> T {
    let two = T::lit(2.0);
    let x = rate * beta;
    beta / two * (two + x) / (T::one() + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Mean wait from the birth-death stationary distribution of the M/M/k,
    /// solved by brute force over a truncated state space.
    fn mmk_wait_birth_death(k: usize, rho: f64, mu: f64) -> f64 {
        let lambda = k as f64 * rho * mu;
        let cap = 20_000;
        let mut pi = vec![0.0f64; cap];
        pi[0] = 1.0;
        for n in 1..cap {
            let down = mu * (n.min(k) as f64);
            pi[n] = pi[n - 1] * lambda / down;
        }
        let total: f64 = pi.iter().sum();
        let mean_queue: f64 = pi.iter().enumerate().map(|(n, p)| n.saturating_sub(k) as f64 * p / total).sum();
        mean_queue / lambda
    }

    #[test]
    fn erlang_c_examples() {
        assert!((erlang_c_wait(1, 0.5f64, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((erlang_c_wait(2, 0.5f64, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(erlang_c_wait(2, 1.0, 1.0), Err(AnalyticError::UnstableLoad));
    }

    #[test]
    fn erlang_c_matches_birth_death() {
        for &(k, rho, mu) in &[(2, 0.5, 1.0), (10, 0.8, 1.0), (37, 0.9, 2.5), (100, 0.5, 1.0), (250, 0.95, 0.1)] {
            let exact = mmk_wait_birth_death(k, rho, mu);
            let got = erlang_c_wait(k as u64, rho, mu).unwrap();
            assert!((got - exact).abs() <= 1e-10 * exact.max(1e-12), "k={k} rho={rho}: {got} vs {exact}");
        }
    }

    #[test]
    fn erlang_c_large_k_is_finite() {
        let e = erlang_c(1_000_000, 0.999f64, 1.0).unwrap();
        assert!(e.delay_probability.is_finite() && e.delay_probability > 0.0 && e.delay_probability < 1.0);
    }

    #[test]
    fn welch_examples() {
        let w = welch_mm1_setup_wait(0.5f64, 1.0, 10.0).unwrap();
        assert!((w - (1.0 + 5.0 * 7.0 / 6.0)).abs() < 1e-12);
        assert_eq!(welch_mm1_setup_wait(0.5, 1.0, 0.0).unwrap(), 1.0);
        assert!(welch_mm1_setup_wait(1.0, 1.0, 1.0).is_err());
    }
}
