//! Simulation and closed-form analytics for M/M/k queues whose servers pay a
//! deterministic setup time before they can serve.
//!
//! The crate is split the way the work is split:
//!
//! * [`model`] holds the parameter and policy types.
//! * [`analytic`] evaluates the closed-form approximation, the upper and lower
//!   bounds on the mean queue length, and the hitting-time bounds they rest on.
//! * [`sim`] is a discrete-event simulator producing exact sample paths.
//! * [`estimate`] turns independent replications into confidence intervals.
//! * [`oracles`] Monte-Carlo checks of the supporting probabilistic claims.
//! * [`provision`] solves for the smallest server count meeting a wait target.
//!
//! Model and analytic code is generic over the floating point type; the
//! aliases below pin the `f64` instantiation used by the simulator and CLI.

// Comparisons are written `!(x > 0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod estimate;
pub mod model;
pub mod oracles;
pub mod provision;
pub mod scalar;
pub mod sim;

pub use scalar::Scalar;

pub type SystemParams = model::SystemParams<f64>;
pub type AssumptionRegion = model::AssumptionRegion<f64>;
pub type BoundConstants = analytic::BoundConstants<f64>;
pub type BoundsReport = analytic::BoundsReport<f64>;

pub type SystemParams32 = model::SystemParams<f32>;
pub type BoundConstants32 = analytic::BoundConstants<f32>;
