use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed record; `line` is 1-based.
    #[error("parse error at {origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    /// The caller violated an operation precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("provider transport error: {0}")]
    Transport(String),

    #[error(
        "generation failed for topic {topic_id} / profile {profile_id} after {attempts} attempts"
    )]
    Generation {
        topic_id: String,
        profile_id: String,
        attempts: usize,
        raw_responses: Vec<String>,
    },

    #[error(
        "labeling failed for topic {topic_id} / passage {passage_id} after {attempts} attempts"
    )]
    Labeling {
        topic_id: String,
        passage_id: String,
        attempts: usize,
        raw_responses: Vec<String>,
    },

    #[error("unbalanced design: {0}")]
    Imbalance(String),

    #[error("numerical error: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        origin: impl Into<String>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            origin: origin.into(),
            line,
            message: message.into(),
        }
    }

    /// True for failures of the completion provider (transport, exhausted retries).
    pub fn is_provider_failure(&self) -> bool {
        matches!(
            self,
            Error::Transport(_) | Error::Generation { .. } | Error::Labeling { .. }
        )
    }
}
