use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("slot index {slot} out of range for curve of length {len}")]
    SlotOutOfRange { slot: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("graph must be square, got {rows}x{cols}")]
    NonSquareGraph { rows: usize, cols: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid money literal `{0}`")]
    MoneyParse(String),

    #[error("R^2 is undefined: labels have no variance")]
    UndefinedR2,

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
