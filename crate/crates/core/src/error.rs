use thiserror::Error;

/// Errors produced anywhere in the waveform toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid length: {0}")]
    InvalidLength(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precoder is singular: characteristic entry {index} is zero")]
    SingularPrecoder { index: usize },

    #[error("matrix is singular or rank deficient: {0}")]
    SingularMatrix(String),

    #[error("matrix is not positive definite (minimum eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("numeric failure after {iterations} iterations: {reason}")]
    Numeric { iterations: usize, reason: String },

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("matrix is not rank one (lambda2/lambda1 = {ratio:e})")]
    NotRankOne { ratio: f64 },

    #[error("{stage} did not converge within {iterations} iterations")]
    Convergence { stage: String, iterations: usize, trace: Vec<crate::optimizer::TraceRow> },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric { .. }
            | Error::Convergence { .. }
            | Error::NotRankOne { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::SingularMatrix(_)
            | Error::SingularPrecoder { .. }
            | Error::Infeasible(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
