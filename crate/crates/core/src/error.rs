use thiserror::Error;

/// Errors produced anywhere in the simulation stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("invalid plan: {0}")]
    Plan(String),

    #[error("observable is not Hermitian (max anti-Hermitian residue {0:.3e})")]
    NonHermitian(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("routing error: {0}")]
    Routing(String),

    #[error("ill-conditioned matrix: {0}")]
    Conditioning(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("rank-deficient input: {0}")]
    RankDeficient(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
