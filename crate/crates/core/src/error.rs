use thiserror::Error;

use crate::circuitry::FeasibilityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's preconditions (bad index, wrong length, bad layout).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A physical quantity fell outside the range a model or table supports.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible circuitry: {0}")]
    Infeasible(FeasibilityReport),

    #[error("air-side coupling did not converge after {iterations} iterations (last residual {last_residual:.3e} K)")]
    NotConverged {
        iterations: usize,
        last_residual: f64,
        /// Max air-temperature change per outer iteration.
        trace: Vec<f64>,
    },

    #[error("enumeration refused for t={tubes}: cap is t<={cap}; pass the override to go further")]
    EnumerationCap { tubes: usize, cap: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
