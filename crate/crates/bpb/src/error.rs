use std::io;
use std::path::PathBuf;

/// Problems with input files. Maps to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("unknown dataset format {0:?}")]
    UnknownFormat(String),
    #[error("duplicate example id {0:?}")]
    DuplicateId(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl DataError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        DataError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn schema(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        DataError::Schema {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }
}
