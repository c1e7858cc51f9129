use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the function being evaluated.
    #[error("{what} = {value} is outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    /// A transformed attention function has no derivative at its kink.
    #[error("attention is not differentiable at lambda = {at} (left slope {left}, right slope {right})")]
    Kink { at: f64, left: f64, right: f64 },

    /// A model parameter failed validation. `key` is the configuration key.
    #[error("{key}: {reason}")]
    InvalidParameter { key: &'static str, reason: String },

    #[error("dist: virtual value is not increasing near theta = {at}")]
    NonRegular { at: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A guaranteed property failed; indicates a solver bug rather than bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(key: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key,
            reason: reason.into(),
        }
    }
}
