//! Library side of the `setupq` command: sweep specs, CSV rendering and the
//! error type that maps onto exit codes.

pub mod bounds;
pub mod output;
pub mod sweep;

use std::process::ExitCode;

use thiserror::Error;

/// Errors surfaced to the user. The variant decides the exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, a malformed spec or an invalid parameter: exit 2.
    #[error("{0}")]
    Usage(String),
    /// A check ran and failed: exit 1.
    #[error("{0}")]
    Failed(String),
    /// The run itself broke (I/O, simulation abort): exit 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Failed(_) | CliError::Runtime(_) => ExitCode::from(1),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io: {e}"))
    }
}

/// Validation failures in the library are the user's input being wrong.
impl From<setupq::model::ModelError> for CliError {
    fn from(e: setupq::model::ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<setupq::analytic::AnalyticError> for CliError {
    fn from(e: setupq::analytic::AnalyticError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<setupq::sim::SimError> for CliError {
    fn from(e: setupq::sim::SimError) -> Self {
        use setupq::sim::SimError;
        match e {
            SimError::InvalidConfig(_) | SimError::Model(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<setupq::estimate::EstimateError> for CliError {
    fn from(e: setupq::estimate::EstimateError) -> Self {
        use setupq::estimate::EstimateError;
        match e {
            EstimateError::Sim(s) => s.into(),
            EstimateError::InsufficientReplications(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<setupq::provision::ProvisionError> for CliError {
    fn from(e: setupq::provision::ProvisionError) -> Self {
        use setupq::provision::ProvisionError;
        match e {
            ProvisionError::Estimate(inner) => inner.into(),
            ProvisionError::Unachievable { .. } => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<setupq::oracles::OracleError> for CliError {
    fn from(e: setupq::oracles::OracleError) -> Self {
        use setupq::oracles::OracleError;
        match e {
            OracleError::InvalidBudget(_) | OracleError::Model(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
