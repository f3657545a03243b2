use thiserror::Error;

/// Errors produced by the chain library.
#[derive(Debug, Error)]
pub enum Error {
    /// A physical input is outside the domain the library models.
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched or inconsistent configuration objects.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterative solver failed to reach its tolerance.
    #[error("{what} did not converge: residual {residual:.3e} after {iterations} iterations")]
    Convergence {
        what: String,
        residual: f64,
        iterations: usize,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
