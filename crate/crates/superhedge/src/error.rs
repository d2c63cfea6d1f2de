//! Error type shared by every module.

use thiserror::Error;

/// Failures surfaced by the engine.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violates the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A model, partition or measure fails validation.
    #[error("invalid model: {0}")]
    Invalid(String),
    /// A model file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
    /// An immediate profit blocks an operation that requires the AIP condition.
    #[error("immediate profit at t={time}, block {block}")]
    ImmediateProfit { time: usize, block: String },
    /// A mathematical invariant that must hold by construction failed.
    #[error("internal consistency violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
