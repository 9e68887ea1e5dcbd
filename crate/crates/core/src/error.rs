use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite {what} in problem {problem} at x_u={x_u:?}, x_l={x_l:?}")]
    NonFinite {
        problem: String,
        what: String,
        x_u: Vec<f64>,
        x_l: Vec<f64>,
    },

    #[error("unknown problem '{id}'; available: {}", available.join(", "))]
    UnknownProblem { id: String, available: Vec<String> },

    #[error("problem {id} is unverified and cannot be used here: {reason}")]
    Unverified { id: String, reason: String },

    #[error("generation {generation} outside schedule of {total} generations")]
    GenerationOutOfRange { generation: usize, total: usize },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
