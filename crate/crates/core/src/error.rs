use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("conllu line {line}: {message}")]
    Conllu { line: usize, message: String },

    #[error("scores line {line}: {message}")]
    Scores { line: usize, message: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("misaligned inputs: {0}")]
    Misaligned(String),

    #[error("sentence {0} has no gold heads")]
    MissingGold(String),

    #[error("invalid constraint: {0}")]
    Constraint(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("search space too large: {0}")]
    SearchSpace(String),

    #[error("compile error: {0}")]
    Compile(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
