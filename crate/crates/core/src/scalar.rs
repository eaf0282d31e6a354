use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the simulation math is generic over.
///
/// Everything numerical in this crate (dynamics, sensing, the planner, the
/// estimators) is written against this trait so the whole pipeline can be
/// instantiated at `f32` or `f64`. The crate-root aliases pin `f64`, which is
/// what the shipped tolerances are calibrated for.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
    /// Shorthand for lossless construction from an `f64` literal.
    ///
    /// Panics if the value is not representable, which cannot happen for the
    /// finite constants this crate feeds it.
    fn c(value: f64) -> Self {
        Self::from_f64(value).expect("finite literal")
    }

    /// Two, spelled once.
    fn two() -> Self {
        Self::one() + Self::one()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Wraps an angle to the half-open interval `(-pi, pi]`.
pub(crate) fn wrap_angle<F: Scalar>(a: F) -> F {
    let two_pi = F::TAU();
    let mut x = a % two_pi;
    if x <= -F::PI() {
        x += two_pi;
    } else if x > F::PI() {
        x -= two_pi;
    }
    x
}
