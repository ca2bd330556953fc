use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    /// A parameter record violates one of its invariants.
    #[error("invalid parameter `{field}`: {detail}")]
    InvalidParameter { field: &'static str, detail: String },

    /// A numerical integration did not reach its tolerance within budget.
    #[error("integration did not converge in {context}: estimate {estimate:e}, error estimate {error:e} after {evals} evaluations")]
    Integration {
        context: &'static str,
        estimate: f64,
        error: f64,
        evals: usize,
    },

    /// A Gaussian quadratic form that must be positive definite is not.
    #[error("quadratic form is not positive definite ({context})")]
    NotPositiveDefinite { context: &'static str },

    /// Simulation setup cannot resolve the requested scales.
    #[error("simulation configuration: {0}")]
    Configuration(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        what,
        detail: detail.into(),
    }
}

pub(crate) fn invalid(field: &'static str, detail: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        detail: detail.into(),
    }
}
