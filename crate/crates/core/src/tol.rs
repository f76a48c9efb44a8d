//! Tolerance constants used across the crate, collected in one place.
//!
//! Two families are distinguished: algebraic tolerances guard identities that
//! hold exactly in real arithmetic, statistical tolerances guard Monte-Carlo
//! comparisons. All constants are stated for `f64`; [`scaled`] floors them at
//! `512 * eps` of the target scalar so narrower floats stay usable.

use crate::scalar::Scalar;

/// Identities that are exact in real arithmetic.
pub const ALGEBRAIC: f64 = 1e-10;
/// Monte-Carlo and closed-form-vs-enumeration comparisons.
pub const STATISTICAL: f64 = 1e-8;
/// Hermiticity deviation accepted by validating constructors.
pub const HERMITIAN: f64 = 1e-12;
/// Unit-trace deviation accepted by density-matrix constructors.
pub const TRACE: f64 = 1e-10;
/// Most negative eigenvalue accepted as positive semidefinite.
pub const PSD_MIN_EIGENVALUE: f64 = -1e-10;

/// Converts a tolerance to scalar `S`, floored at `512 * eps(S)`.
pub fn scaled<S: Scalar>(base: f64) -> S {
    let floor = S::epsilon() * S::from_f64_lossy(512.0);
    let base = S::from_f64_lossy(base);
    if base > floor {
        base
    } else {
        floor
    }
}
