use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type for every vector, model and metric in the crate.
///
/// Tolerances in the checks are expressed in `f64` and converted with
/// [`Scalar::of`]; they are calibrated for `f64`, which is what the
/// binaries use. `f32` works for training and inference but the
/// `1e-12`-level identities will not hold at that precision.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` constant.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance for the unit-norm invariant at this precision.
    fn unit_tolerance() -> Self {
        Self::of(1e-9).max(Self::epsilon() * Self::of(64.0))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
