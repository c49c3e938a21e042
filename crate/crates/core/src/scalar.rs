use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the model is generic over.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + AddAssign
    + SubAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; exact for `f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
