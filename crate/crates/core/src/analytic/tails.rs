//! Hitting-time and passage-time bounds for the random walks that drive the
//! queue between server on/off events.

use statrs::function::gamma::ln_gamma;

use super::{AnalyticError, BoundConstants};
use crate::scalar::Scalar;

/// Upper bound on `P(gamma_c >= t)` for the continuous-time walk started at 1,
/// as a function of `nu = (2R - j) mu t`. Requires `nu >= 3`.
pub fn hitting_tail_upper<T: Scalar>(nu: T, c: &BoundConstants<T>) -> Result<T, AnalyticError> {
    if !(nu >= T::lit(3.0)) {
        return Err(AnalyticError::HypothesisViolated);
    }
    let scale = c.b1 / T::SQRT_2();
    Ok(scale * (T::one() / nu.sqrt() + c.b2 / (nu * nu.sqrt())))
}

/// Lower bound on `P(gamma_c >= t)` for the critically loaded walk (`j = 0`).
/// Requires `nu >= 3`.
pub fn hitting_tail_lower<T: Scalar>(nu: T, c: &BoundConstants<T>) -> Result<T, AnalyticError> {
    if !(nu >= T::lit(3.0)) {
        return Err(AnalyticError::HypothesisViolated);
    }
    let scale = c.b1 / T::SQRT_2();
    let damp = (-T::one() / (T::lit(3.0) * (nu - T::one()))).exp();
    Ok(scale * damp / (nu + T::lit(2.0)).sqrt())
}

/// Upper bound on `E[min(beta, tau)]` for a critically loaded M/M/1 busy
/// period (both rates `mu R`): `b1 sqrt(beta / (mu R)) + 6 / (mu R)`.
pub fn stopped_busy_mean_upper<T: Scalar>(beta: T, offered_load: T, mu: T, c: &BoundConstants<T>) -> T {
    let rate = mu * offered_load;
    c.b1 * (beta / rate).sqrt() + c.d3 / rate
}

/// Mean return time to level `R + h` in the M/M/(R+h)/(R+h) loss system:
///
/// `1/(mu (R+h)) * sum_{i=0}^{R+h} (R^i / i!) / (R^(R+h) / (R+h)!)`.
///
/// It upper-bounds the M/M/∞ passage time from `R + h - 1` to `R + h`. The
/// sum is accumulated in log space from the top level down, so neither the
/// factorials nor the powers are ever formed.
pub fn mminf_passage_mean<T: Scalar>(offered_load: u64, h: u64, mu: T) -> Result<T, AnalyticError> {
    if h < 1 {
        return Err(AnalyticError::InvalidLevel);
    }
    let top = offered_load + h;
    let ln_r = (offered_load as f64).ln();
    // ln of the i-th term relative to the top one: sum_{l=i+1}^{top} ln(l / R).
    let mut ln_term = 0.0f64;
    let mut max_ln = 0.0f64;
    let mut ln_terms = Vec::with_capacity(top as usize + 1);
    ln_terms.push(0.0);
    for i in (0..top).rev() {
        ln_term += ((i + 1) as f64).ln() - ln_r;
        max_ln = max_ln.max(ln_term);
        ln_terms.push(ln_term);
    }
    let scaled: f64 = ln_terms.iter().map(|&l| (l - max_ln).exp()).sum();
    let ln_ratio = max_ln + scaled.ln();
    let ratio = T::from_f64(ln_ratio.exp()).ok_or(AnalyticError::Overflow)?;
    if !ratio.is_finite() {
        return Err(AnalyticError::Overflow);
    }
    Ok(ratio / (mu * T::from_count(top)))
}

/// `P(gamma = 2 ell + 1) = q (q p)^ell C_ell`: probability that the `+-1`
/// walk started at 1, stepping up with probability `p`, first hits 0 at step
/// `2 ell + 1`. Evaluated in log space.
pub fn catalan_hitting_pmf<T: Scalar>(p: T, ell: u64) -> T {
    let q = T::one() - p;
    if q == T::zero() {
        return T::zero();
    }
    if ell == 0 {
        return q;
    }
    if p == T::zero() {
        return T::zero();
    }
    let l = ell as f64;
    let ln_catalan = ln_gamma(2.0 * l + 1.0) - ln_gamma(l + 2.0) - ln_gamma(l + 1.0);
    let pf = p.to_f64().unwrap_or(f64::NAN);
    let qf = q.to_f64().unwrap_or(f64::NAN);
    let ln_pmf = qf.ln() + l * (qf * pf).ln() + ln_catalan;
    T::from_f64(ln_pmf.exp()).unwrap_or_else(T::zero)
}

/// Successive values `P(gamma = 1), P(gamma = 3), ...` via the Catalan
/// recurrence `C_{l+1} = C_l * 2 (2l + 1) / (l + 2)`.
#[derive(Debug, Clone)]
pub struct CatalanPmf<T> {
    next: T,
    step: T,
    ell: u64,
}

impl<T: Scalar> CatalanPmf<T> {
    pub fn new(p: T) -> Self {
        let q = T::one() - p;
        Self { next: q, step: p * q, ell: 0 }
    }
}

impl<T: Scalar> Iterator for CatalanPmf<T> {
    type Item = T;

    fn next(&mut self) -> Option<T> {
        let current = self.next;
        let l = T::from_count(self.ell);
        let two = T::lit(2.0);
        self.next = current * self.step * two * (two * l + T::one()) / (l + two);
        self.ell += 1;
        Some(current)
    }
}

/// `P(gamma > 2m + 1)` for the symmetric walk, `C(2m+1, m) / 2^(2m+1)`, from
/// the reflection principle.
pub fn symmetric_survival(m: u64) -> f64 {
    let n = (2 * m + 1) as f64;
    let mf = m as f64;
    let ln_binom = ln_gamma(n + 1.0) - ln_gamma(mf + 1.0) - ln_gamma(mf + 2.0);
    (ln_binom - n * std::f64::consts::LN_2).exp()
}
