use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] ruinlab_core::Error),

    /// An embedded reference file failed to parse; indicates a build
    /// problem, not user error.
    #[error("reference data: {0}")]
    Fixture(String),

    #[error("table number must be 1..=4, got {0}")]
    BadTable(u8),

    #[error("figure number must be 1..=8, got {0}")]
    BadFigure(u8),

    #[error("unknown scenario label {0:?} (expected H1, H2, M1, M2, L1 or L2)")]
    BadScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
