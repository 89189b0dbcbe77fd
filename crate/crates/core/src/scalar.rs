//! Scalar abstractions.
//!
//! The operator layer on finite spaces, the step-2 group law and the direct
//! Dirichlet solver only need ordered-field arithmetic, so they are written
//! against [`Scalar`] and run unchanged on `f32`, `f64` and exact rationals.
//! Anything needing roots or transcendental functions asks for [`Real`].

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// An ordered field.
pub trait Scalar:
    Num + Neg<Output = Self> + Clone + PartialOrd + Debug + Display + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `false` for NaN and infinities; always `true` for exact types.
    fn is_finite_value(&self) -> bool;

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::one() / Self::two()
    }

    fn abs_value(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Lossy conversion used for reporting.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f64 {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for BigRational {
    fn is_finite_value(&self) -> bool {
        true
    }
}

/// A floating-point scalar.
pub trait Real: Scalar + Float + FloatConst {
    fn from_f64_lossy(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 converts to every Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Exact rational from a numerator and denominator.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Largest absolute entry, or zero for an empty slice.
pub fn max_abs<T: Scalar>(values: &[T]) -> T {
    values
        .iter()
        .map(Scalar::abs_value)
        .fold(T::zero(), |acc, v| if v > acc { v } else { acc })
}
