//! Floating point abstraction shared by every solver in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;

/// Real scalar the solvers are generic over: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + FftNum + Debug + Display + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Tolerance used for self-checks that are "exact up to roundoff".
    ///
    /// Scaled so that it is roughly `1e-12` for `f64`.
    fn roundoff_tol() -> Self {
        Self::epsilon() * Self::lit(4096.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundoff_tolerance_scales_with_precision() {
        assert!(f64::roundoff_tol() < 1e-12);
        assert!(f64::roundoff_tol() > 1e-13);
        assert!(f32::roundoff_tol() > 1e-4);
        assert_eq!(<f32 as Real>::lit(0.5), 0.5f32);
    }
}
