use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error(
        "mean in-degree {mean_in} and mean out-degree {mean_out} differ by more than {tolerance}"
    )]
    UnbalancedMeans {
        mean_in: f64,
        mean_out: f64,
        tolerance: f64,
    },

    #[error("invalid degree sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("fixed-point iteration did not converge after {iterations} steps (last change {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("no simple digraph found in {attempts} attempts")]
    AttemptsExhausted { attempts: usize },

    #[error("graph too large for this operation: n = {n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
