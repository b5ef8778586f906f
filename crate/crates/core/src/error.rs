use thiserror::Error;

#[derive(Debug, Error)]
pub enum VceError {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("entry {value} at coordinate {coord} lies outside the alphabet")]
    OutOfAlphabet { coord: usize, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("instance too large for the exact solver: {0}")]
    TooLarge(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("all {attempts} attempts exhausted without success")]
    AttemptsExhausted { attempts: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed CSV: {0}")]
    Csv(String),
}

impl VceError {
    pub fn is_budget(&self) -> bool {
        matches!(self, VceError::BudgetExceeded(_))
    }
}

pub type Result<T> = std::result::Result<T, VceError>;
