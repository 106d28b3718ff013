//! Scalar abstraction for the pmf / information-measure core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar the pmf core is generic over: f32 or f64.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + num_traits::ToPrimitive + Sum + Debug + Display + 'static
{
    /// Lossless-enough conversion from f64 for tolerances and literals.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
