use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied arguments that do not fit the atlas or configuration.
    #[error("usage error: {0}")]
    Usage(String),

    /// A point lies outside the region where a chart is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A file could not be parsed or failed validation.
    #[error("format error: {0}")]
    Format(String),

    #[error("no path between node {start} (component of {start_component} nodes) and node {goal} (component of {goal_component} nodes)")]
    NoPath {
        start: usize,
        goal: usize,
        start_component: usize,
        goal_component: usize,
    },

    #[error("no connection: chart {chart} has no graph nodes")]
    NoConnection { chart: usize },

    #[error("atlas fingerprint mismatch: graph was built with {graph}, got {atlas}")]
    Fingerprint { graph: String, atlas: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Fingerprint { .. } => 2,
            Error::NoPath { .. } | Error::NoConnection { .. } => 3,
            Error::Format(_) | Error::Io { .. } => 4,
            Error::Domain(_) => 5,
        }
    }
}
