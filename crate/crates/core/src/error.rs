//! Error type shared across the crate.

use std::path::PathBuf;

/// Errors produced by loaders, the pipeline, and the search routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Missing or unreadable file.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Unsupported or malformed file contents.
    #[error("format error: {0}")]
    Format(String),
    /// Dataset directory does not follow the expected layout.
    #[error("layout error: {0}")]
    Layout(String),
    /// Rasters passed to an operation do not share dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Invalid parameter or configuration value.
    #[error("config error: {0}")]
    Config(String),
    /// Semantic availability and map presence disagree for a frame.
    #[error("schedule error: {0}")]
    Schedule(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code the CLI maps this error to: 1 for configuration
    /// problems, 2 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Schedule(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
