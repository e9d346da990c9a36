//! Error type shared by every module of the crate.

use crate::specflow::CrossingRecord;
use thiserror::Error;

/// Failure categories surfaced by the toolkit.
///
/// `InvalidInput` covers precondition violations (dimension mismatches,
/// degenerate problem data), `NumericalFailure` covers breakdowns of the
/// numerical procedures themselves (non-convergence, uncertifiable windows,
/// unresolvable crossings).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A crossing whose restricted quadratic form is degenerate. The record
    /// carries the located parameter, kernel frame and form so the caller can
    /// inspect it or retry with a perturbation.
    #[error("degenerate crossing at lambda = {}", .0.lambda_star)]
    DegenerateCrossing(Box<CrossingRecord>),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::NumericalFailure(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
