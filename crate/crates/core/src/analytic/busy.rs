//! Mean length and mean queue-time integral of an M/M/1 busy period whose
//! service rate exceeds the arrival rate `mu R` by `mu j`.

use super::AnalyticError;
use crate::scalar::Scalar;

/// `T(n, j) = n / (mu j)`: expected time for `n` jobs to drain at surplus
/// service rate `mu j`.
pub fn busy_period_length<T: Scalar>(n: T, j: T, mu: T) -> Result<T, AnalyticError> {
    if !(j > T::zero()) {
        return Err(AnalyticError::DegenerateDrift);
    }
    Ok(n / (mu * j))
}

/// `I(n, j) = n / (mu j) * [(n + 1) / 2 + R / j + 1]`.
///
/// This equals the expected integral of `N + 1` over a busy period of the
/// M/M/1 with arrival rate `mu R`, service rate `mu (R + j)`, started by `n`
/// jobs; it exceeds the integral of `N` by exactly `T(n, j)`.
pub fn busy_period_integral<T: Scalar>(n: T, j: T, offered_load: T, mu: T) -> Result<T, AnalyticError> {
    let length = busy_period_length(n, j, mu)?;
    let half = T::lit(0.5);
    Ok(length * ((n + T::one()) * half + offered_load / j + T::one()))
}
