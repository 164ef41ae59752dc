use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid value for `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("world generation failed: {0}")]
    Generation(String),

    #[error("episode reward state has no initial distance")]
    MissingInitialDistance,

    #[error("non-finite gradient component {index} at episode {episode}")]
    NonFiniteGradient { episode: usize, index: usize },

    #[error("checkpoint mismatch: {0}")]
    Mismatch(String),

    #[error("failed to parse {what}: {message}")]
    Parse { what: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
