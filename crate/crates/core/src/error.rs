use thiserror::Error;

/// Errors produced by the estimation, distribution and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(String),

    #[error("column `{0}` has zero variance")]
    DegenerateColumn(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse { row: usize, column: String, message: String },

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("E[chi^-{order}] is infinite for {df} degrees of freedom")]
    InfiniteMoment { df: u32, order: u32 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("test statistic is zero; the Stein rule is undefined there (use the pretest estimator)")]
    ZeroStatistic,

    #[error("coordinate descent did not converge after {iterations} sweeps (KKT residual {kkt_residual:.3e})")]
    NoConvergence { iterations: usize, kkt_residual: f64 },

    #[error("quadrature did not converge (error estimate {estimate:.3e})")]
    Quadrature { estimate: f64 },

    #[error("cell {cell} aborted: {failed} of {reps} replicates failed")]
    CellAborted { cell: String, failed: usize, reps: usize },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
