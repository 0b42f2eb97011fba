//! Scalar abstraction shared by every numerical routine in the crate.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating point scalar the solvers are written against (`f32` or `f64`).
///
/// The tolerances used throughout the verification code are tuned for `f64`;
/// `f32` instantiations are useful for the substrate (quadrature, finite
/// differences, transport) but will not meet the tight acceptance bounds.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("index representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Floor applied to densities inside logarithms and negative powers only.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// `log(max(x, floor))`; mass accounting never goes through this.
#[inline]
pub(crate) fn safe_ln<T: Real>(x: T) -> T {
    x.max(density_floor()).ln()
}

#[inline]
pub(crate) fn density_floor<T: Real>() -> T {
    T::lit(DENSITY_FLOOR).max(T::min_positive_value())
}
