//! Classical shadow estimation over the dense dual bases (DDB) ensemble.
//!
//! The DDB snapshot set on a `d`-dimensional system consists of the `2d^2 - d`
//! rank-1 projectors
//!
//! ```text
//!   P_t            = |t><t|                                   t = 0..d-1
//!   P_jk^+/-       = |f><f|,  f = (|j> +/- |k>)/sqrt(2)       0 <= j < k < d
//!   Q_jk^+/-       = |g><g|,  g = (|j> +/- i|k>)/sqrt(2)
//! ```
//!
//! grouped into orthonormal bases built from pair partitions of `{0..d-1}`.
//! Measuring a random basis and inverting the induced measurement channel
//! yields an unbiased estimator of `tr(rho O)` whose per-shot post-processing
//! touches O(1) entries of `O`.
//!
//! Modules:
//! - [`linalg`]: dense complex matrices, validated Hermitian/density types,
//!   seeded random streams, and state samplers.
//! - [`ensemble`]: snapshot enumeration, pair partitions, basis construction,
//!   and O(1) snapshot sampling.
//! - [`channel`]: the measurement channel, its inverse, and the constant-time
//!   single-shot estimator.
//! - [`estimator`]: exact snapshot distributions, shot simulation, mean /
//!   median-of-means aggregation, shot planning, and the binary shadow log.
//! - [`variance`]: closed-form single-shot second moment, its diagonal and
//!   basis-resolved pieces, and bound audits.
//! - [`average`]: deviation-from-maximally-mixed classification and the
//!   proportion study across qubit counts.
//! - [`gf2`]: bit-packed GF(2) linear algebra.
//! - [`stabilizer`]: affine-form stabilizer states, block reduction under an
//!   affine index map, and the reduced-block expectation pipeline.
//! - [`io`]: JSON schemas for observables, states, and stabilizer states.
//!
//! Everything numeric is generic over the real [`Scalar`] type; `f64` aliases
//! are exported at the crate root and are what the CLI and the acceptance
//! suite use.

pub mod average;
pub mod channel;
pub mod ensemble;
pub mod error;
pub mod estimator;
pub mod gf2;
pub mod io;
pub mod linalg;
pub mod scalar;
pub mod stabilizer;
pub mod tol;
pub mod variance;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Complex scalar over `f64`.
pub type C64 = num_complex::Complex<f64>;
/// Complex scalar over `f32`.
pub type C32 = num_complex::Complex<f32>;

/// Dense complex matrix over `f64`.
pub type ComplexMatrix64 = linalg::ComplexMatrix<f64>;
/// Validated Hermitian observable over `f64`.
pub type HermitianObservable64 = linalg::HermitianObservable<f64>;
/// Validated density matrix over `f64`.
pub type DensityMatrix64 = linalg::DensityMatrix<f64>;

/// Largest supported Hilbert-space dimension for dense types.
pub const MAX_DIM: usize = 4096;
/// Largest qubit count for which stabilizer amplitude tables are materialized.
pub const MAX_AMPLITUDE_QUBITS: usize = 12;
/// Largest qubit count for stabilizer structural operations (bit-packed u64).
pub const MAX_STRUCTURAL_QUBITS: usize = 60;

/// Validates `2 <= dim <= MAX_DIM`; the first gate for any user-supplied
/// dimension.
pub fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 || dim > MAX_DIM {
        return Err(Error::DimensionOutOfRange { dim, max: MAX_DIM });
    }
    Ok(())
}
