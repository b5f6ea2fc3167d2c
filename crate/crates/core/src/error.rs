use std::io;

use thiserror::Error;

/// Errors produced by the recovery toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or non-finite input data.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    /// A parameter lies outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A structural precondition (orthonormality, subspace containment,
    /// support) does not hold.
    #[error("structural precondition violated: {0}")]
    Structural(String),

    #[error("division by zero: {0}")]
    Division(String),

    /// An iterative kernel hit its iteration cap.
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    /// Power iteration stopped making progress; `trace` holds the successive
    /// norm estimates.
    #[error("power iteration stalled after {iterations} iterations (last estimate {last:.6e})")]
    PowerIterationStalled {
        iterations: usize,
        last: f64,
        trace: Vec<f64>,
    },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_probability(p: f64, what: &str) -> Result<()> {
    if p.is_finite() && p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{what} must lie in (0, 1], got {p}")))
    }
}
