use thiserror::Error;

pub type Result<T, E = GpError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GpError {
    /// Malformed inputs: wrong dimension, empty data, duplicate design rows.
    #[error("input error: {0}")]
    Input(String),

    /// A hyperparameter is outside its bounds or violates a kernel constraint.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Linear algebra breakdown, e.g. Cholesky failure after jitter escalation.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("optimization failed: {message}")]
    Optimization {
        message: String,
        diagnostics: Vec<String>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl GpError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        GpError::Input(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        GpError::Parameter(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        GpError::Numerical(msg.into())
    }
}
