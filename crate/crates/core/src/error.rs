use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("leaf D{index} is out of range for a {arity}-bit input")]
    LeafOutOfRange { index: usize, arity: usize },

    #[error("cannot parse code fragment at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("cannot enumerate {0}-bit input space (limit is 24 bits)")]
    Capacity(usize),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("metrics schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
