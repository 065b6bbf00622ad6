use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unitary: max |U†U - 1| = {max_dev:.3e}")]
    NonUnitary { max_dev: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian: max |W - W†| = {max_dev:.3e}")]
    NonHermitian { max_dev: f64 },
    #[error("operator must be traceless with tr(σ†σ) = q: {0}")]
    InvalidOperator(String),
    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("need amplitudes up to k = {needed}, have {have}")]
    InsufficientAmplitudes { needed: usize, have: usize },
    #[error("folded dimension {dim} exceeds budget {limit}")]
    OutOfBudget { dim: usize, limit: usize },
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("infeasible amplitudes: {0}")]
    Infeasible(String),
    #[error("fit window holds {found} points, need at least {needed}")]
    InsufficientPoints { found: usize, needed: usize },
    #[error("invalid light-cone coordinates: {0}")]
    InvalidCoordinates(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
