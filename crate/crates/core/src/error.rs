use thiserror::Error;

/// Errors raised by fitting, criterion evaluation and weight optimization.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The design restricted to the largest model is not of full column rank.
    #[error("design is rank deficient: column {column} is linearly dependent on the preceding columns")]
    RankDeficient { column: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Weights are not on the probability simplex.
    #[error("weights are not on the simplex: {0}")]
    SimplexViolation(String),

    #[error("mean shift must be finite, got {0}")]
    NonFiniteAlpha(f64),

    #[error("quadratic program has non-finite or malformed entries: {0}")]
    BadProblem(String),

    #[error("solver did not converge after {iterations} iterations (kkt residual {kkt_residual:e})")]
    NonConvergence { iterations: usize, kkt_residual: f64 },

    #[error("weight grid has {count} points, above the limit of {limit}")]
    GridTooLarge { count: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
