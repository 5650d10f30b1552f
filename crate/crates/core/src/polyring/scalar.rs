use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Coefficient field of a [`Polynomial`](super::Polynomial).
pub trait Scalar:
    Clone + PartialEq + PartialOrd + Debug + Display + Num + Neg<Output = Self> + Send + Sync + 'static
{
    fn from_i64(value: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs_value(&self) -> Self;
}

impl Scalar for Rational {
    fn from_i64(value: i64) -> Self {
        BigRational::from_integer(BigInt::from(value))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn abs_value(&self) -> Self {
        self.abs()
    }
}

impl Scalar for f64 {
    fn from_i64(value: i64) -> Self {
        value as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs_value(&self) -> Self {
        self.abs()
    }
}

/// Exact rational value of a finite `f64`.
///
/// Only used on construction paths (rounding numerical Gram matrices);
/// verification never converts floats back to rationals.
pub fn rational_from_f64(value: f64) -> Option<Rational> {
    if value.is_zero() {
        return Some(Rational::zero());
    }
    BigRational::from_f64(value)
}
