//! Scalar abstraction for the numerical core.
//!
//! Everything downstream is written against [`Real`] so the same code runs
//! at `f32` and `f64`. The validation tolerances quoted in the test suite
//! assume `f64`.

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for converting an `f64` literal into the working scalar.
#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Two pi in the working scalar.
#[inline]
pub(crate) fn tau<T: Real>() -> T {
    T::PI() + T::PI()
}
