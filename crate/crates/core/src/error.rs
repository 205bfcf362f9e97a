use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("not Hermitian: max |A_ij - conj(A_ji)| = {deviation:.3e} exceeds {tolerance:.1e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("eigensolver failed to converge on a {dim}x{dim} matrix ({detail})")]
    EigenNoConvergence { dim: usize, detail: String },

    #[error("singular value decomposition failed on a {rows}x{cols} matrix")]
    SvdNoConvergence { rows: usize, cols: usize },

    #[error("function undefined at retained eigenvalue {eigenvalue:.6e}")]
    Domain { eigenvalue: f64 },

    #[error("operator dimension {required} exceeds budget {limit}")]
    BudgetExceeded { required: usize, limit: usize },

    #[error("n = {n} needs dimension {required} beyond budget {limit}; largest feasible n is {max_feasible}")]
    CopiesExceedBudget {
        n: usize,
        required: usize,
        limit: usize,
        max_feasible: usize,
    },

    #[error("shape {factors:?} (product {product}) does not match operator dimension {dim}")]
    ShapeMismatch {
        factors: Vec<usize>,
        product: usize,
        dim: usize,
    },

    #[error("invalid density operator: {0}")]
    InvalidState(String),

    #[error("invalid test operator: eigenvalues must lie in [0, 1], found {0:.6e}")]
    InvalidTest(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("channel is not trace preserving: deviation {0:.3e}")]
    NotTracePreserving(f64),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
