use thiserror::Error;

use crate::linsolve::SolveError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0} (expected 2 or 3)")]
    Dimension(usize),

    #[error("division count {0} is too small (need N >= 2)")]
    Divisions(usize),

    #[error("point {0:?} lies outside the unit domain")]
    OutsideDomain(Vec<f64>),

    #[error("upwind foot {foot:?} leaves the domain by {excess:.3e}")]
    FootOutside { foot: Vec<f64>, excess: f64 },

    #[error("CFL condition violated at step {step}: dt*|u|_1,inf = {product:.4} >= {limit}")]
    Cfl { step: usize, product: f64, limit: f64 },

    #[error("linear solve failed: {0}")]
    Solve(#[from] SolveError),

    #[error("linear solver did not converge at step {step}: relative residual {residual:.3e} after {iterations} iterations")]
    NotConverged {
        step: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
