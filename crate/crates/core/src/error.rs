use thiserror::Error;

use crate::expr::{EvalError, ParseError};

/// Errors raised by the verification engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid chart instance: {0}")]
    InvalidInstance(String),
    #[error("metric is not positive definite at {0:?}")]
    SingularMetric(Vec<f64>),
    #[error("warping function u = {value} is not positive at {point:?}")]
    NonPositiveU { point: Vec<f64>, value: f64 },
    #[error("form unavailable: {0}")]
    FormUnavailable(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("identity is degenerate for m = 1")]
    MDegenerate,
    #[error("not a closed surface: {0}")]
    NotClosedSurface(String),
    #[error("invalid fiber: {0}")]
    InvalidFiber(String),
    #[error("m = {0} is not a positive integer")]
    NonIntegerM(f64),
    #[error("fiber constant is not constant: spread {spread:e} exceeds {tol:e}")]
    MuNotConstant { spread: f64, tol: f64 },
    #[error("the two fiber-constant formulas disagree: {u_form} vs {f_form}")]
    MuCrossCheck { u_form: f64, f_form: f64 },
    #[error("unsupported ansatz: {0}")]
    UnsupportedAnsatz(String),
    #[error("step too large: drift {drift:e} between h and h/2 exceeds {limit:e}")]
    StepTooLarge { drift: f64, limit: f64 },
    #[error("insufficient nodes: {0} (need at least 8)")]
    InsufficientNodes(usize),
    #[error("ODE solution did not reach the end of its interval: {0}")]
    IncompleteSolution(String),
    #[error("inconsistent constants: {0}")]
    InconsistentConstants(String),
    #[error("complex structure requires even dimension, got {0}")]
    OddDimension(usize),
    #[error("gradient degenerate at {0:?}")]
    DegenerateGradient(Vec<f64>),
    #[error("mismatched constants: {0}")]
    MismatchedConstants(String),
    #[error("empty point set")]
    EmptySample,
}

impl Error {
    /// Errors confined to a single sample point. Runs skip such points and
    /// count them instead of aborting.
    pub fn is_pointwise(&self) -> bool {
        matches!(
            self,
            Error::SingularMetric(_)
                | Error::NonPositiveU { .. }
                | Error::Eval(EvalError::Domain { .. })
                | Error::DegenerateGradient(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
