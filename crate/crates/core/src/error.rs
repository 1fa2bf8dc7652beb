use thiserror::Error;

/// Errors returned by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("length {len} is not a multiple of {m} bits per symbol")]
    NotMultiple { len: usize, m: usize },
    #[error("symbol index {index} out of range for a {size}-point constellation")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("empty input")]
    Empty,
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("channel density unavailable: {0}")]
    PdfUnavailable(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("code construction failed: {0}")]
    Construction(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("target not bracketed: {0}")]
    NoBracket(String),
    #[error("insufficient measurement data: need {needed} symbols, have {available}")]
    InsufficientData { needed: usize, available: usize },
    #[error("degenerate measurement: {0}")]
    Degenerate(String),
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
