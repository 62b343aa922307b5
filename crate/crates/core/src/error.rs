use thiserror::Error;

use crate::problem::Regime;

/// Every failure the solver can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IospError {
    #[error("exponent p must be finite and greater than 1, got {0}")]
    InvalidExponent(f64),
    #[error("eigenvalue index must be at least 1, got {0}")]
    InvalidIndex(i64),
    #[error("non-finite input: {0}")]
    NonFiniteInput(&'static str),
    #[error("grid must have at least {min} intervals, got {got}")]
    InvalidGrid { got: usize, min: usize },

    #[error("radicand is not positive ({value:e}) at t = {t}")]
    RadicandNonpositive { t: f64, value: f64 },
    #[error("quadrature tolerance {tol:e} not met after {panels} panels (estimate {estimate:e})")]
    ToleranceNotMet { tol: f64, panels: usize, estimate: f64 },
    #[error("argument outside the domain: {0}")]
    DomainError(String),

    #[error("no sign change found: {0}")]
    BracketFailure(String),
    #[error("root search did not converge in {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("operation not defined in the {0} regime")]
    RegimeMismatch(Regime),

    #[error("first integral drifted by {residual:e} (limit {limit:e})")]
    ConservationViolated { residual: f64, limit: f64 },
    #[error("trajectory misses the right boundary: |u(1)| = {value:e} (limit {limit:e})")]
    BoundaryMiss { value: f64, limit: f64 },
    #[error("closed form needs p = 2 and m = 1, got p = {p}, m = {m}")]
    UnsupportedExponent { p: f64, m: u32 },
}

impl IospError {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            IospError::InvalidExponent(_)
                | IospError::InvalidIndex(_)
                | IospError::NonFiniteInput(_)
                | IospError::InvalidGrid { .. }
                | IospError::UnsupportedExponent { .. }
                | IospError::RegimeMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, IospError>;
