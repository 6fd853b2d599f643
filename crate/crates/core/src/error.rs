use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: malformed {record} record: {message}")]
    Parse {
        file: String,
        line: usize,
        record: String,
        message: String,
    },

    #[error("validation failed for {record}: field `{field}` {message}")]
    Validation {
        record: String,
        field: String,
        message: String,
    },

    #[error("{file}:{line}: unknown relation tag `{tag}` in line `{text}`")]
    UnknownRelation {
        file: String,
        line: usize,
        tag: String,
        text: String,
    },

    #[error("concept `{0}` is not part of the concept hierarchy")]
    ConceptNotInHierarchy(String),

    #[error("no activities")]
    NoActivities,

    #[error("graph assembly: {0}")]
    Assembly(String),

    #[error("{kind} `{name}` not found")]
    NotFound { kind: &'static str, name: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("serialization: {0}")]
    Serialization(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn validation(
        record: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Validation {
            record: record.into(),
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn not_found(kind: &'static str, name: impl Into<String>) -> Self {
        Error::NotFound { kind, name: name.into() }
    }
}
