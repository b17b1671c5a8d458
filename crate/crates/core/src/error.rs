use thiserror::Error;

/// Errors raised across estimation, inference and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A class (1-based in messages) has no samples or no responsibility mass.
    #[error("class {class} has no training mass")]
    MissingClass { class: usize },

    #[error("all observations coincide; bandwidth would be zero")]
    DegenerateData,

    #[error("linear solve failed: {0}")]
    SingularSystem(String),

    #[error("cannot normalize frame {frame}: all weights are zero")]
    Unnormalizable { frame: usize },

    #[error("{0}")]
    NonFinite(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
