use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument outside the domain of the function it was passed to.
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    /// A configuration value that violates a type invariant.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    /// A solver or integrator could not produce a result of the requested accuracy.
    #[error("numerical failure in {stage}: {detail}")]
    Numerical { stage: &'static str, detail: String },

    /// Malformed input data (NaN residuals, schema mismatch, bad serialization).
    #[error("input error: {0}")]
    Input(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn numerical(stage: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            stage,
            detail: detail.into(),
        }
    }
}
