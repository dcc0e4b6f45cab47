use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("validation failed: {0}")]
    Validation(String),

    /// A rate formula or parameter rule was evaluated outside the regime
    /// where it is defined; the message names the violated inequality.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("solver diverged{}: {detail}", match agent { Some(j) => format!(" at agent {j}"), None => String::new() })]
    Divergence { agent: Option<usize>, detail: String },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn divergence(agent: Option<usize>, detail: impl Into<String>) -> Self {
        Error::Divergence {
            agent,
            detail: detail.into(),
        }
    }
}
