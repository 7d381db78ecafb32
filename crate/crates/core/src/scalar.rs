//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, Signed, ToPrimitive};

/// Floating-point scalar the solver runs on (`f32` or `f64`).
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + MomentField
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Field the moment-condition solver works over: floats, or exact rationals.
///
/// Only ring/field operations, an absolute value for pivot selection, and
/// conversion from small integers are needed.
pub trait MomentField:
    Clone + Debug + PartialOrd + Signed + FromPrimitive + ToPrimitive + Send + Sync
{
    /// Relative pivot threshold below which a moment system counts as singular.
    fn singular_threshold() -> Self;

    /// Largest acceptable relative moment residual.
    fn moment_tolerance() -> Self;
}

impl MomentField for f64 {
    fn singular_threshold() -> Self {
        1e-14
    }

    fn moment_tolerance() -> Self {
        1e-10
    }
}

impl MomentField for f32 {
    fn singular_threshold() -> Self {
        1e-6
    }

    fn moment_tolerance() -> Self {
        1e-4
    }
}

impl MomentField for num_rational::BigRational {
    fn singular_threshold() -> Self {
        num_traits::Zero::zero()
    }

    fn moment_tolerance() -> Self {
        num_traits::Zero::zero()
    }
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: FromPrimitive>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a small integer into `T`.
#[inline]
pub fn int<T: FromPrimitive>(n: i64) -> T {
    T::from_i64(n).expect("integer representable in scalar type")
}
