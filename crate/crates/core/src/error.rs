use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("accuracy not attained: {0}")]
    Accuracy(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("Picard iteration did not converge after {iterations} sweeps (last residual {residual:e}); shrink the horizon or dt")]
    NonConvergence { iterations: usize, residual: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
