//! Closed-form analytics: busy-period quantities, the queue-length
//! approximation and bounds, no-setup baselines, and hitting-time bounds.
//!
//! Everything here is a pure function of its arguments.

mod baseline;
mod busy;
mod queue;
mod tails;

use thiserror::Error;

pub use baseline::{erlang_c, erlang_c_wait, welch_mm1_setup_wait, ErlangC};
pub use busy::{busy_period_integral, busy_period_length};
pub use queue::{q_approx, q_low_r, q_lower, q_lower_mpolicy, q_upper, tightness_simplified, LowerBound};
pub use tails::{
    catalan_hitting_pmf, hitting_tail_lower, hitting_tail_upper, mminf_passage_mean, stopped_busy_mean_upper,
    symmetric_survival, CatalanPmf,
};

use crate::model::{AssumptionRegion, SystemParams};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AnalyticError {
    #[error("DegenerateDrift: busy period needs a positive service surplus")]
    DegenerateDrift,
    #[error("NoSurplusServers: the lower bound needs k > R")]
    NoSurplusServers,
    #[error("BufferTooLarge: the buffered-policy bound needs m <= sqrt(R)")]
    BufferTooLarge,
    #[error("UnstableLoad: load must lie strictly inside (0, 1)")]
    UnstableLoad,
    #[error("HypothesisViolated: the tail bound needs nu >= 3")]
    HypothesisViolated,
    #[error("InvalidLevel: the passage level offset h must be at least 1")]
    InvalidLevel,
    #[error("Overflow: passage time is not representable")]
    Overflow,
    #[error("InvalidConstants: {0}")]
    InvalidConstants(&'static str),
}

/// Numeric constants of the approximation and the bounds. Defaults are the
/// published values; every one is overridable so sensitivity can be probed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants<T> {
    /// `(2/3) sqrt(pi/2)`.
    pub l1: T,
    /// `sqrt(pi/2)`, the large-system limit of `l1`.
    pub c_apx: T,
    pub f1: T,
    pub f2: T,
    /// `sqrt(2/pi)`.
    pub b1: T,
    /// `1 + 2.5 / (b1 sqrt(2))`.
    pub b2: T,
    pub d1: T,
    pub d2: T,
    pub d3: T,
    pub mpol_f2: T,
    pub mpol_f3: T,
    pub mpol_f4: T,
}

impl<T: Scalar> Default for BoundConstants<T> {
    fn default() -> Self {
        let half_pi_sqrt = T::FRAC_PI_2().sqrt();
        let b1 = (T::lit(2.0) / T::PI()).sqrt();
        Self {
            l1: T::lit(2.0) / T::lit(3.0) * half_pi_sqrt,
            c_apx: half_pi_sqrt,
            f1: T::lit(2.12),
            f2: T::lit(3.645),
            b1,
            b2: T::one() + T::lit(2.5) / (b1 * T::SQRT_2()),
            d1: b1,
            d2: T::lit(7.0),
            d3: T::lit(6.0),
            mpol_f2: T::lit(0.23),
            mpol_f3: T::lit(2.6),
            mpol_f4: T::lit(7.2),
        }
    }
}

impl<T: Scalar> BoundConstants<T> {
    pub fn validate(&self) -> Result<(), AnalyticError> {
        let all = [
            self.l1,
            self.c_apx,
            self.f1,
            self.f2,
            self.b1,
            self.b2,
            self.d1,
            self.d2,
            self.d3,
            self.mpol_f2,
            self.mpol_f3,
            self.mpol_f4,
        ];
        if !all.iter().all(|v| *v > T::zero() && v.is_finite()) {
            return Err(AnalyticError::InvalidConstants("every constant must be positive and finite"));
        }
        if !(self.l1 < self.c_apx) {
            return Err(AnalyticError::InvalidConstants("l1 must be smaller than c_apx"));
        }
        Ok(())
    }
}

/// Every analytic prediction for one parameter point. Waits follow from the
/// queue lengths by Little's law, `t = q / (k lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport<T> {
    pub q_approx: T,
    pub q_upper: T,
    /// Zero when the lower bound is unavailable (`k <= R`).
    pub q_lower: T,
    pub q_low_r: T,
    pub t_approx: T,
    pub t_upper: T,
    pub t_lower: T,
    pub t_low_r: T,
    /// Mean wait of the same system without setup.
    pub t_erlang_c: T,
    /// `q_upper / q_lower`; infinite when the lower bound is unavailable.
    pub tightness_ratio: T,
    pub in_region: bool,
    pub lower_available: bool,
    pub lower_clamped: bool,
}

pub fn bounds_report<T: Scalar>(params: &SystemParams<T>, c: &BoundConstants<T>) -> BoundsReport<T> {
    bounds_report_in(params, c, &AssumptionRegion::default())
}

pub fn bounds_report_in<T: Scalar>(
    params: &SystemParams<T>,
    c: &BoundConstants<T>,
    region: &AssumptionRegion<T>,
) -> BoundsReport<T> {
    let rate = params.total_arrival_rate();
    let q_approx = queue::q_approx(params, c);
    let q_upper = queue::q_upper(params, c);
    let q_low_r = queue::q_low_r(params);
    let (q_lower, lower_available, lower_clamped) = match queue::q_lower(params, c) {
        Ok(lb) => (lb.value, true, lb.denominator_clamped),
        Err(_) => (T::zero(), false, false),
    };
    let tightness_ratio = if q_lower > T::zero() { q_upper / q_lower } else { T::infinity() };
    // rho is validated into (0, 1), so Erlang-C cannot fail here.
    let t_erlang_c = baseline::erlang_c_wait(params.k(), params.rho(), params.mu()).unwrap_or_else(|_| T::nan());
    BoundsReport {
        q_approx,
        q_upper,
        q_lower,
        q_low_r,
        t_approx: q_approx / rate,
        t_upper: q_upper / rate,
        t_lower: q_lower / rate,
        t_low_r: q_low_r / rate,
        t_erlang_c,
        tightness_ratio,
        in_region: region.contains(params),
        lower_available,
        lower_clamped,
    }
}
