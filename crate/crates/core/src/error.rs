use thiserror::Error;

use crate::circuit::MonteCarloStats;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,

    #[error("index {index} out of range (valid: 0..={max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("exclusion band {exclusion} lies inside the main lobe (first null at {first_null})")]
    InvalidBand { exclusion: f64, first_null: f64 },

    #[error("overlap is zero; filtering error is undefined")]
    UndefinedOverlap,

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("restart budget of {max_restarts} exceeded")]
    RestartBudgetExceeded {
        max_restarts: usize,
        partial: MonteCarloStats,
    },

    #[error("internal consistency violated: {0}")]
    Consistency(String),

    #[error("{}", config_message(*line, message))]
    Config { line: usize, message: String },

    #[error("table {path}: {message}")]
    Table { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn config_message(line: usize, message: &str) -> String {
    match line {
        0 => format!("config: {message}"),
        n => format!("config line {n}: {message}"),
    }
}

impl Error {
    pub(crate) fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }
}
