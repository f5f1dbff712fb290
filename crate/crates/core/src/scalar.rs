use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the estimators are generic over.
///
/// Besides the arithmetic bounds, each implementation carries the numerical
/// tolerances that depend on the precision of the type.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + ndarray::ScalarOperand
    + 'static
{
    /// Relative tolerance for declaring a residual an exact interpolation:
    /// `|r_i| <= zero_tol * (1 + |y_i|)`.
    fn zero_tol() -> Self;
    /// Relative pivot threshold used when testing rows for linear independence.
    fn pivot_tol() -> Self;
    /// Relative slack allowed on simplex reduced costs.
    fn opt_tol() -> Self;
    /// L1 change in the linear coefficients below which LLA stops.
    fn lla_tol() -> Self;

    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable")
    }

    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn zero_tol() -> Self {
        1e-8
    }
    fn pivot_tol() -> Self {
        1e-11
    }
    fn opt_tol() -> Self {
        1e-11
    }
    fn lla_tol() -> Self {
        1e-7
    }
}

impl Scalar for f32 {
    fn zero_tol() -> Self {
        5e-4
    }
    fn pivot_tol() -> Self {
        1e-5
    }
    fn opt_tol() -> Self {
        1e-5
    }
    fn lla_tol() -> Self {
        1e-4
    }
}
