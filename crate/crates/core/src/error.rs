use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing field: {0}")]
    MissingField(&'static str),

    #[error("duplicate id: {0}")]
    DuplicateId(String),

    #[error("invalid value for {field}: {reason}")]
    InvalidField { field: &'static str, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("token range {start}..{end} is invalid for a sequence of {len} tokens")]
    Range { start: usize, end: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: String, found: String },

    #[error("checksum error: {0}")]
    Checksum(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("unknown passage id: {0}")]
    UnknownPassage(String),

    #[error("non-finite loss at step {step} (batch query ids: {batch:?})")]
    NonFiniteLoss { step: usize, batch: Vec<String> },

    #[error("test split contaminated: {0} document(s) also appear in train")]
    Contamination(usize),

    #[error("transport error: {0}")]
    Transport(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
