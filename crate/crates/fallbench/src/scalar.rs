//! Scalar abstraction: all feature and model math is generic over the
//! floating-point type, with `f64` as the concrete default at the crate root.

use std::fmt::{Debug, Display};

/// Floating-point scalar usable throughout the feature and model pipeline.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    fn from_usize_(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable as scalar")
    }
    fn from_f64_(v: f64) -> Self {
        Self::from_f64(v).expect("f64 representable as scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
