use thiserror::Error;

use crate::conversion::FeasibilityVerdict;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Amplitudes, efficiency or matrix entries that do not describe a physical state.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Argument outside the domain of the operation (mixing weight, transmissivity, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The conditioning event has zero probability (or zero density).
    #[error("zero-probability outcome: {0}")]
    ZeroProbability(String),

    #[error("transformation infeasible: {}", .0.reason)]
    Infeasible(Box<FeasibilityVerdict>),

    #[error("no solution: {0}")]
    NoSolution(String),

    /// Amplitude pushed past the Fock truncation by a unitary.
    #[error("truncation overflow: leaked norm {leaked:.3e} exceeds tolerance at N = {truncation}")]
    TruncationOverflow { leaked: f64, truncation: usize },

    #[error("invalid POVM element: {0}")]
    InvalidPovm(String),

    #[error("csv output: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
