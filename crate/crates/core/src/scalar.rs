use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the toolkit computes with: `f32` or `f64`.
pub trait Real:
    RealField + Copy + Send + Sync + 'static + FromPrimitive + ToPrimitive + FromStr + Debug + Display + LowerExp + Default
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Sign with `sgn(0) = 0`, unlike `f64::signum`.
    #[inline]
    fn sgn(self) -> Self {
        if self > Self::zero() {
            Self::one()
        } else if self < Self::zero() {
            -Self::one()
        } else {
            Self::zero()
        }
    }

    #[inline]
    fn finite(self) -> bool {
        self.to_f64_lossy().is_finite()
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgn_of_zero_is_zero() {
        assert_eq!(0.0f64.sgn(), 0.0);
        assert_eq!((-0.0f64).sgn(), 0.0);
        assert_eq!(2.5f32.sgn(), 1.0);
        assert_eq!((-1e-30f64).sgn(), -1.0);
    }

    #[test]
    fn finiteness() {
        assert!(1.0f64.finite());
        assert!(!f64::NAN.finite());
        assert!(!f32::INFINITY.finite());
    }
}
