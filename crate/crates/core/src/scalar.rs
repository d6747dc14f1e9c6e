//! Numeric abstraction shared by channels, codes and the simplex solver.
//!
//! Everything that touches probabilities is generic over [`Scalar`], which is
//! implemented for `f64`, `f32` and [`BigRational`]. Floating-point types carry
//! a comparison tolerance; the rational type compares exactly.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// True when arithmetic is exact and `tolerance()` is zero.
    const EXACT: bool;

    /// Absolute tolerance for pivoting, feasibility and optimality tests.
    fn tolerance() -> Self;

    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar")
    }

    /// Converts from `f64`. Rationals take the exact binary value of the float.
    fn from_f64_value(x: f64) -> Self {
        Self::from_f64(x).expect("finite value")
    }

    fn to_f64_value(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_positive_tol(&self) -> bool {
        *self > Self::tolerance()
    }

    fn is_negative_tol(&self) -> bool {
        *self < -Self::tolerance()
    }

    fn is_zero_tol(&self) -> bool {
        self.abs() <= Self::tolerance()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;
    fn tolerance() -> Self {
        1e-5
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    fn tolerance() -> Self {
        BigRational::zero()
    }
}

/// Exact fraction `num/den` as a rational.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Converts a scalar into another scalar type, going through `f64` unless
/// both ends are the same representation.
pub fn convert<A: Scalar, B: Scalar>(a: &A) -> B {
    B::from_f64_value(a.to_f64_value())
}

pub(crate) fn sum<T: Scalar, I: IntoIterator<Item = T>>(it: I) -> T {
    it.into_iter().fold(T::zero(), |acc, x| acc + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances() {
        assert!(f64::tolerance() > 0.0);
        assert!(BigRational::tolerance().is_zero());
        assert!(!BigRational::from_f64_value(1e-30).is_zero_tol());
        assert!(1e-12f64.is_zero_tol());
    }

    #[test]
    fn rational_from_float_is_exact() {
        let r = BigRational::from_f64_value(0.1);
        assert_ne!(r, ratio(1, 10));
        assert_eq!(r.to_f64_value(), 0.1);
        assert_eq!(BigRational::from_usize_exact(7), ratio(7, 1));
    }
}
