use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid block specification: {0}")]
    InvalidBlocks(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// No normalizable geometric profile exists for this ratio.
    #[error("no normalizable Gibbs state for ratio {0} (need 0 < ratio < 1)")]
    NotNormalizable(f64),

    #[error("leaked mass {leaked:e} exceeded budget {budget:e} at step {step}")]
    TruncationOverflow { step: usize, leaked: f64, budget: f64 },

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("reducible chain: {0}")]
    Reducible(String),

    #[error("sampler failure: {0}")]
    Sampler(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
