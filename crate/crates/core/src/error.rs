use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("variable {0} is unset")]
    IncompleteAssignment(usize),
    #[error("dimacs parse error on line {line}: {msg}")]
    Dimacs { line: usize, msg: String },
    #[error("contradiction: messages at variable {var} have zero norm")]
    Contradiction { var: usize },
    #[error("product of messages has zero norm")]
    ZeroNorm,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("enumeration refused: {n} variables exceeds the limit of {limit}")]
    TooManyVariables { n: usize, limit: usize },
    #[error("no sign change of the observable in [{lo}, {hi}]")]
    Bracketing { lo: f64, hi: f64 },
    #[error("formula is unsatisfiable")]
    Unsatisfiable,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
