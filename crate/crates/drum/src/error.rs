use thiserror::Error;

#[derive(Debug, Error)]
pub enum DrumError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("rejected record: {0}")]
    Record(String),
    #[error("primitive order in period {period} has a cycle")]
    CyclicOrder { period: usize },
    #[error("degenerate budget arrangement: {0}")]
    DegenerateArrangement(String),
    #[error("size limit exceeded: {0}")]
    Size(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("geometry mismatch: {0}")]
    Geometry(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("model rejected: {0}")]
    ModelRejected(String),
    #[error("undefined: {0}")]
    Undefined(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DrumError>;

pub(crate) fn schema(msg: impl Into<String>) -> DrumError {
    DrumError::Schema(msg.into())
}
