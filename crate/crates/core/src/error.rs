use thiserror::Error;

/// Errors produced by the estimators and their building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is not defined for this distribution family.
    #[error("unsupported distribution family `{family}` for {operation}")]
    UnsupportedFamily {
        family: &'static str,
        operation: &'static str,
    },

    /// The family is supported but this parameter value is not.
    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),

    /// The log-normal conditional estimator needs a standardized threshold of at most one.
    #[error(
        "standardized threshold {standardized} exceeds 1; the conditional log-normal \
         estimator needs gamma_th * exp(-mu) <= 1, use naive_mc for this regime"
    )]
    ThresholdAboveOne { standardized: f64 },

    /// Acceptance-rejection exhausted its proposal budget.
    #[error("acceptance-rejection rejected {0} consecutive proposals")]
    IterationCap(u64),

    /// A root bracket did not contain a sign change.
    #[error("root bracket [{lo}, {hi}] does not contain a sign change")]
    Bracket { lo: f64, hi: f64 },

    /// An iterative numerical routine failed to converge or produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
