//! Real scalar abstraction underlying all complex arithmetic in this crate.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar the numeric core is generic over.
///
/// Implemented for `f32` and `f64`. Reported quantities are converted to
/// `f64`; tolerance constants are specified as `f64` and floored at a small
/// multiple of the scalar's epsilon so the `f32` instantiation remains usable.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum<Self>
    + Send
    + Sync
    + fmt::Debug
    + fmt::Display
    + 'static
{
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts into any supported scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("every supported scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
