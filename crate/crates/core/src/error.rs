use thiserror::Error;

/// Errors raised by the simulator and the certificate checks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KdvError {
    /// Invalid grid, profile, law parameter or scenario value.
    #[error("configuration error: {0}")]
    Config(String),

    /// A scalar argument outside the domain of the formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operator or system too small/large for the requested use.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Zero or tiny pivot encountered while factorizing a band matrix.
    #[error("factorization failed at row {row}: pivot {pivot:e}")]
    Factorization { row: usize, pivot: f64 },

    /// The input lies outside the hypothesis of a certificate check.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// NaN/Inf or energy growth beyond the permitted slack.
    #[error("numerical instability at t = {time}: {message}")]
    Instability { time: f64, message: String },

    /// Picard iteration did not contract.
    #[error("Picard iteration did not contract after {iterations} iterations (last increment {last_increment:e}); try a smaller final time")]
    NonContraction {
        iterations: usize,
        last_increment: f64,
    },
}

impl KdvError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        KdvError::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        KdvError::Domain(msg.into())
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            KdvError::Factorization { .. }
                | KdvError::Instability { .. }
                | KdvError::NonContraction { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, KdvError>;
