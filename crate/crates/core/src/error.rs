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

    #[error("CSV parse error in {path} at line {line}: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("metadata error in {path}: {message}")]
    Metadata { path: PathBuf, message: String },

    #[error("dataset {path} has an empty schema")]
    EmptySchema { path: PathBuf },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing input {name}: expected at {path}")]
    MissingInput { name: String, path: PathBuf },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("unknown dataset {0}")]
    UnknownDataset(String),

    #[error("malformed record in {path} at line {line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Data errors are caused by bad inputs; everything else is a usage or
    /// internal failure.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Csv { .. }
                | Error::Metadata { .. }
                | Error::EmptySchema { .. }
                | Error::MissingInput { .. }
                | Error::Integrity(_)
                | Error::UnknownDataset(_)
                | Error::Record { .. }
        )
    }

    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::Metadata { .. } => "metadata",
            Error::EmptySchema { .. } => "empty_schema",
            Error::Config(_) => "config",
            Error::MissingInput { .. } => "missing_input",
            Error::Integrity(_) => "integrity",
            Error::UnknownDataset(_) => "unknown_dataset",
            Error::Record { .. } => "record",
        }
    }
}
