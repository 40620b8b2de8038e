use thiserror::Error;

/// Crate-wide error type. Solver divergence is an error; descriptive problem
/// defects found by validation are reported as data instead (see
/// [`crate::model::validate_problem`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix not symmetric: max |a_ij - a_ji| = {asymmetry:.3e} exceeds {limit:.3e}")]
    AsymmetricMatrix { asymmetry: f64, limit: f64 },

    #[error("constraint system has zero rows; at least one equality is required")]
    EmptyConstraints,

    #[error("problem document rejected: {0}")]
    Schema(String),

    #[error("objective is not quadratic; only quadratic problems have a document form")]
    NotQuadratic,

    #[error("operation requires a block partition but the problem has none")]
    MissingPartition,

    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    #[error("non-finite value produced at iteration {iter}")]
    NonFinite { iter: u64 },

    #[error("dual iterate norm {norm:.3e} exceeded {limit:.1e} at iteration {iter}")]
    DualDiverged { iter: u64, norm: f64, limit: f64 },

    #[error(
        "subproblem not strongly convex: prox weight {prox_weight} must exceed -gamma = {neg_gamma}"
    )]
    NotStronglyConvex { prox_weight: f64, neg_gamma: f64 },

    #[error(
        "inner solve budget exhausted after {iters} iterations (residual {residual:.3e}, tol {tol:.3e})"
    )]
    InnerBudgetExhausted { iters: u64, residual: f64, tol: f64 },

    #[error("rate fit needs at least {need} points, got {got}")]
    NotEnoughPoints { got: usize, need: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
