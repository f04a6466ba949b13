//! Floating-point scalar abstraction shared by the transducer and the reports.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// floating point: f32 or f64
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Stable `ln(exp(a) + exp(b))` that tolerates `-inf` operands.
    fn log_add(self, other: Self) -> Self {
        if self == Self::neg_infinity() {
            return other;
        }
        if other == Self::neg_infinity() {
            return self;
        }
        let (hi, lo) = if self >= other { (self, other) } else { (other, self) };
        hi + (lo - hi).exp().ln_1p()
    }

    fn from_f64_lossy(value: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(value).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct_sum() {
        let a = 0.25f64.ln();
        let b = 0.5f64.ln();
        assert!((a.log_add(b) - 0.75f64.ln()).abs() < 1e-15);
        assert_eq!(f64::NEG_INFINITY.log_add(b), b);
        assert_eq!(a.log_add(f64::NEG_INFINITY), a);
        let f = 0.25f32.ln().log_add(0.5f32.ln());
        assert!((f - 0.75f32.ln()).abs() < 1e-6);
    }
}
