use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};

use super::json::CoeffMode;

/// Coefficient field of a [`Polynomial`](super::Polynomial).
pub trait Coefficient:
    Clone + Debug + PartialEq + Num + Neg<Output = Self> + Send + Sync + 'static
{
    const MODE: CoeffMode;

    fn from_i64(v: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Exact rational value (finite floats convert exactly).
    fn to_rational(&self) -> BigRational;
}

impl Coefficient for f64 {
    const MODE: CoeffMode = CoeffMode::Float;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> BigRational {
        BigRational::from_float(*self).expect("finite coefficient")
    }
}

impl Coefficient for BigRational {
    const MODE: CoeffMode = CoeffMode::Rational;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> BigRational {
        self.clone()
    }
}
