use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value in field data: {0}")]
    NonFinite(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("series precondition violated: {0}")]
    SeriesDiverges(String),
    #[error("time step underflow at t = {t}: dt = {dt}")]
    DtUnderflow { t: f64, dt: f64 },
    #[error("NaN produced in right-hand side at t = {t}")]
    NanRhs { t: f64 },
    #[error("root bracketing failed: {0}")]
    Bracketing(String),
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("study member diverged: {0}")]
    Diverged(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
