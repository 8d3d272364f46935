//! Error type shared by every subcommand.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] ruinlab_core::Error),

    #[error(transparent)]
    Experiments(#[from] ruinlab_experiments::Error),

    /// A request that fails validation before any computation starts.
    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("configuration file: {0}")]
    Config(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
