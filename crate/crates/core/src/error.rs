use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid model or run parameter.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("series did not converge after {terms} terms")]
    Convergence { terms: usize },

    /// Adaptive quadrature ran out of budget; carries its best estimate.
    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error bound {error_bound:e}")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("index {index} out of range for dimension {dim}")]
    Range { index: usize, dim: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Two independent evaluation routes disagree beyond tolerance.
    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("eigensolver failed: {0}")]
    Solver(String),
}

impl Error {
    /// True for errors caused by bad user input rather than a numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Parameter(_) | Error::Unsupported(_) | Error::Range { .. }
        )
    }
}
