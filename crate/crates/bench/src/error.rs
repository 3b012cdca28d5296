use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] gpw_core::Error),

    #[error("{0}")]
    Domain(String),

    #[error("unknown case {0:?}")]
    UnknownCase(String),

    #[error("case {0} has no exact solution")]
    NoSolution(String),

    #[error("order estimation needs {needed} usable points, found {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("no admissible centre after {0} draws")]
    NoAdmissibleCenter(usize),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
