use std::path::{Path, PathBuf};

use crate::events::EventStreamError;
use crate::metrics::MetricsError;
use crate::network::NetworkError;
use crate::population::PopulationError;
use crate::scoring::ScoringError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Events(#[from] EventStreamError),
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("config: {0}")]
    Config(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl Error {
    pub fn file(path: &Path, source: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> Self {
        Error::File {
            path: path.to_path_buf(),
            source: source.into(),
        }
    }

    /// Whether the error signals a broken simulation invariant rather than bad input.
    pub fn is_invariant(&self) -> bool {
        matches!(self, Error::Invariant(_) | Error::Events(_) | Error::Metrics(_))
    }
}
