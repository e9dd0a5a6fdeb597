use thiserror::Error;

use crate::lasso::LassoSolution;
use crate::sem::SemSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite values in {0}")]
    NonFinite(String),

    /// The elbow detector needs at least three distinct curve samples.
    #[error("curve too short: {distinct} distinct z values, need at least 3")]
    CurveTooShort { distinct: usize },

    #[error("curve carries no lambda annotations; cannot map the result")]
    MissingLambda,

    /// The graph solver hit its iteration cap. Carries the best iterate so
    /// callers can inspect or keep it.
    #[error("graph solver did not converge in {iterations} iterations (kkt violation {kkt_violation:.3e})")]
    SemNonConvergence {
        best: Box<SemSolution>,
        iterations: usize,
        kkt_violation: f64,
    },

    #[error("lasso solver did not converge in {iterations} sweeps")]
    LassoNonConvergence {
        best: Box<LassoSolution>,
        iterations: usize,
    },

    /// Dataset parsing failure with 1-based data-row and column coordinates.
    #[error("parse error at row {row}, column {col}: {message}")]
    Parse {
        row: usize,
        col: usize,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
