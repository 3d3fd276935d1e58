use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    /// Non-finite values appeared while integrating.
    #[error("integration diverged at step {step} (t = {time})")]
    Divergence { step: usize, time: f64 },

    #[error("no steady state: drift matrix is not Hurwitz (max real eigenvalue {max_real_part})")]
    NoSteadyState { max_real_part: f64 },

    /// Gradient formula hit a branch point where its denominator vanishes.
    #[error("degenerate point: {0}")]
    DegeneratePoint(String),

    /// Fock-space truncation is too small for the state being propagated.
    #[error("truncation leakage in mode {mode}: top Fock population {population:e} exceeds {threshold:e}")]
    Truncation {
        mode: usize,
        population: f64,
        threshold: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
