//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("dimension {dim} outside the supported range [2, {max}]")]
    DimensionOutOfRange { dim: usize, max: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not Hermitian: max |A - A^dagger| entry is {max_dev:.3e}")]
    NotHermitian { max_dev: f64 },

    #[error("trace must equal 1, got {trace:.12}")]
    InvalidTrace { trace: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("state vector is not normalized: |v|^2 = {norm_sq:.12}")]
    NotNormalized { norm_sq: f64 },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("snapshot {detail} is invalid for dimension {dim}")]
    InvalidSnapshot { detail: String, dim: usize },

    #[error("positive-semidefinite sampling failed after {attempts} attempts")]
    PsdRetriesExhausted { attempts: usize },

    #[error("binary matrix is rank deficient: rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("qubit count {n} exceeds the cap {cap}")]
    QubitCapExceeded { n: usize, cap: usize },

    #[error("shadow log framing error at record {record}: {message}")]
    ShadowFraming { record: u64, message: String },

    #[error("Hermitian eigensolver did not converge within {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error(
        "variance bound violated for state `{state_id}`: variance {variance:.6e} > bound {bound:.6e}; offending state: {state_json}"
    )]
    BoundViolation {
        state_id: String,
        variance: f64,
        bound: f64,
        state_json: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
