//! Closed-form approximation and bounds on the steady-state mean queue length
//! `E[Q]` of the M/M/k with deterministic setup.
//!
//! Every expression is written so that `mu beta`, `R` and queue lengths are
//! the only quantities that appear unscaled; rescaling time (`mu -> a mu`,
//! `beta -> beta / a`) leaves every output here unchanged.

use super::busy::busy_period_integral;
use super::{AnalyticError, BoundConstants};
use crate::model::SystemParams;
use crate::scalar::Scalar;

/// Renewal-reward approximation of `E[Q]`.
///
/// Numerator approximates the expected queue integral over a renewal cycle,
/// denominator the expected cycle length. Defined as 0 at `beta = 0`, where
/// both vanish.
pub fn q_approx<T: Scalar>(params: &SystemParams<T>, c: &BoundConstants<T>) -> T {
    let beta = params.beta();
    if beta == T::zero() {
        return T::zero();
    }
    let mu = params.mu();
    let rho = params.rho();
    let half = T::lit(0.5);
    let excess = params.relative_setup() * c.c_apx * params.offered_load().sqrt();
    let drain = excess / (mu * surplus_capacity(params));
    let numerator = half * mu * beta * beta * c.c_apx * params.offered_load().sqrt()
        + drain * ((excess + T::one()) * half + T::one() / (T::one() - rho));
    numerator / (beta + drain)
}

/// Low-load approximation: the single-server setup penalty
/// `beta/2 (2 + mu R beta)/(1 + mu R beta)` turned into a queue length by
/// Little's law.
pub fn q_low_r<T: Scalar>(params: &SystemParams<T>) -> T {
    let wait = super::baseline::setup_penalty(params.total_arrival_rate(), params.beta());
    params.total_arrival_rate() * wait
}

/// Upper bound on `E[Q]`.
pub fn q_upper<T: Scalar>(params: &SystemParams<T>, c: &BoundConstants<T>) -> T {
    let mu = params.mu();
    let beta = params.beta();
    let r = params.offered_load();
    let rho = params.rho();
    let mb = params.relative_setup();
    let z = surplus_capacity(params);

    let g = |x: T, y: T| {
        let two = T::lit(2.0);
        x / (two * mu * z) + y * (r / (mu * z * z) + T::lit(3.0) / (two * mu * z))
    };

    let head = T::lit(3.6) * (mb * r).sqrt() + T::lit(2.04) * rho / (T::one() - rho);
    let numerator =
        T::lit(4.05) * mu * beta * beta * r.sqrt() + g(T::lit(9.0) * mb * mb * r, T::lit(3.0) * mb * r.sqrt());
    let denominator = beta + c.l1 * mb * r.sqrt() / (mu * z);
    if denominator == T::zero() {
        // beta = 0: the setup fraction vanishes along with its denominator.
        return head;
    }
    head + numerator / denominator
}

/// Value of a lower bound together with whether its denominator hit the
/// `beta` floor (only possible far outside the assumption region).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBound<T> {
    pub value: T,
    pub denominator_clamped: bool,
}

/// Lower bound on `E[Q]`; requires at least one surplus server, `k > R`.
pub fn q_lower<T: Scalar>(params: &SystemParams<T>, c: &BoundConstants<T>) -> Result<LowerBound<T>, AnalyticError> {
    let surplus = surplus_servers(params)?;
    let mu = params.mu();
    let beta = params.beta();
    let r = params.offered_load();
    let sqrt_r = r.sqrt();
    let mb = params.relative_setup();
    let one = T::one();

    let initial = positive_part(c.l1 * mb * sqrt_r - surplus);
    let numerator = c.l1 * mu * beta * beta * sqrt_r + busy_period_integral(initial, surplus, r, mu)?;

    let inv_mu = one / mu;
    let denominator = T::lit(2.08) * beta
        + c.f1 * mb * sqrt_r / (mu * surplus)
        + T::lit(1.5) * inv_mu * mb.ln()
        + inv_mu * (c.f1 * c.d1).ln()
        + T::lit(2.0) * inv_mu
        + inv_mu * (c.d2 + c.d3 / sqrt_r) * (one / (c.d1 * mb.sqrt())).max(one / sqrt_r);

    let clamped = !(denominator >= beta);
    let denominator = if clamped { beta } else { denominator };
    let value = if denominator > T::zero() { numerator / denominator } else { T::zero() };
    Ok(LowerBound { value, denominator_clamped: clamped })
}

/// Lower bound on `E[Q]` under the buffered policy that keeps `m` extra
/// servers on. Valid for `m <= sqrt(R)`; the value itself does not depend on
/// `m`.
pub fn q_lower_mpolicy<T: Scalar>(params: &SystemParams<T>, m: u64, c: &BoundConstants<T>) -> Result<T, AnalyticError> {
    let r = params.offered_load();
    let sqrt_r = r.sqrt();
    if T::from_count(m) > sqrt_r {
        return Err(AnalyticError::BufferTooLarge);
    }
    let surplus = surplus_servers(params)?;
    let mu = params.mu();
    let beta = params.beta();
    let mb = params.relative_setup();

    let initial = positive_part(c.mpol_f2 * mb * sqrt_r - surplus);
    let numerator = c.mpol_f2 * mu * beta * beta * sqrt_r + busy_period_integral(initial, surplus, r, mu)?;
    let denominator = c.mpol_f3 * beta + c.mpol_f4 * mb * sqrt_r / (mu * surplus.min(sqrt_r));
    if denominator == T::zero() {
        return Ok(T::zero());
    }
    Ok(numerator / denominator)
}

/// Order-level surrogate `mu beta sqrt(R) + 1/(1 - rho)` that both bounds
/// match up to constant factors.
pub fn tightness_simplified<T: Scalar>(params: &SystemParams<T>) -> T {
    params.relative_setup() * params.offered_load().sqrt() + T::one() / (T::one() - params.rho())
}

fn surplus_capacity<T: Scalar>(params: &SystemParams<T>) -> T {
    T::from_count(params.k()) * (T::one() - params.rho())
}

fn surplus_servers<T: Scalar>(params: &SystemParams<T>) -> Result<T, AnalyticError> {
    let surplus = T::from_count(params.k()) - params.offered_load();
    if surplus > T::zero() {
        Ok(surplus)
    } else {
        Err(AnalyticError::NoSurplusServers)
    }
}

fn positive_part<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}
