use thiserror::Error;

pub type Result<T> = std::result::Result<T, MasaError>;

#[derive(Debug, Error)]
pub enum MasaError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("state id {state} out of range for {k_states} states")]
    InvalidState { state: usize, k_states: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("regularized covariance of state {state} is not positive definite")]
    DegenerateCovariance { state: usize },

    #[error("parse error at row {row}, column {col}: cannot read {value:?} as a number")]
    Parse { row: usize, col: usize, value: String },

    #[error("input file contains no data rows")]
    EmptyInput,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
