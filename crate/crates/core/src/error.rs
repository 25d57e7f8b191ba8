use thiserror::Error;

/// Errors produced by the elemodds kernels and pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative kernel ran out of iterations. This is an internal failure,
    /// never a result.
    #[error("{routine} did not converge within {iterations} iterations")]
    NoConvergence { routine: &'static str, iterations: usize },

    /// The assembled finite element system was not positive definite.
    #[error("singular finite element system (pivot {pivot} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The two-step law is undefined at the critical mesh size.
    #[error("two-step law is undefined at h = h* = {0}")]
    AtThreshold(f64),

    /// A solve inside an experiment failed.
    #[error("solver failure at h = {h}, trial {trial}: {source}")]
    Trial {
        h: f64,
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
