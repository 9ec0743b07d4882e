//! Scalar abstraction shared by every numerical routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real scalar type accepted by the toolkit.
///
/// Implemented for `f32` and `f64`. Tolerances quoted in the documentation
/// assume `f64`; single precision runs the same code with looser accuracy.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into the scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }

    /// Widens the value to `f64`.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }

    /// Converts a count or index into the scalar type.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("representable count")
    }

    /// Converts a signed integer into the scalar type.
    fn int(n: i64) -> Self {
        Self::from_i64(n).expect("representable integer")
    }
}

impl Real for f32 {}
impl Real for f64 {}
