//! Library side of the `bench` and `rsplatform` binaries.

pub mod bench;
pub mod node;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Bench(#[from] ruleagents::bench::BenchError),
    #[error("IO_ERROR: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("USAGE: {0}")]
    Usage(String),
    #[error("LAUNCH_ERROR: {0}")]
    Launch(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
