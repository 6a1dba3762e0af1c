use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("conditioning block is singular (eigenvalue {eigenvalue:e} at or below tolerance)")]
    SingularBlock { eigenvalue: f64 },

    #[error("model is degenerate: no eigenvalue above the rank tolerance")]
    DegenerateModel,

    #[error("invalid sampler spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
