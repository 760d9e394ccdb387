//! Error types shared across the crate.

use crate::solver::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Grid too small for the requested stencil or operation.
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    /// A point, rectangle, ball or circle escapes the domain it must lie in.
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched shapes, invalid parameters or malformed data.
    #[error("input error: {0}")]
    Input(String),

    /// A documented precondition was violated by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A check's hypothesis (not the check itself) fails; sweeps may skip
    /// these configurations without masking genuine failures.
    #[error("hypothesis failure: {0}")]
    Hypothesis(String),

    /// Newton iteration exhausted its budget; the report records the attempt.
    #[error("solver failed to converge after {} iterations (final residual {:.3e})",
            report.iterations, report.final_residual)]
    Convergence { report: Box<SolveReport> },

    /// The linearized system could not be factorized.
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code contract: 2 = input/config error, 3 = solver
    /// non-convergence, 1 = anything else that aborts a check.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Convergence { .. } => 3,
            Error::Io(_) => 2,
            Error::Config(_)
            | Error::Input(_)
            | Error::Domain(_)
            | Error::DegenerateGrid(_)
            | Error::Precondition(_) => 2,
            _ => 1,
        }
    }
}
