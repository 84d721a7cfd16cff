//! Scalar fields the series arithmetic runs over.

use core::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::math;

/// Exact rational scalar used by the formal recursion.
pub type Rational = BigRational;

/// Which scalar field a jet or series carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarMode {
    ExactRational,
    Float64,
}

/// Coefficient field for [`PolyJet`](super::PolyJet) and [`LogSeries`](super::LogSeries).
///
/// Two implementations exist: [`Rational`] (exact) and `f64`. Mixing them is
/// a type error, which is how the "equal scalar mode" precondition is enforced.
pub trait Scalar: Clone + PartialEq + Debug + Send + Sync + 'static {
    const MODE: ScalarMode;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_int(v: i64) -> Self;
    fn from_frac(num: i64, den: i64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// `None` when `self` is zero.
    fn recip(&self) -> Option<Self>;
    fn to_f64(&self) -> f64;
    /// Best-effort conversion from a float; exact for rationals (dyadic expansion).
    fn from_f64(v: f64) -> Option<Self>;

    fn add_assign(&mut self, other: &Self) {
        *self = Scalar::add(self, other);
    }

    /// `self += a * b`
    fn mul_add_assign(&mut self, a: &Self, b: &Self) {
        let p = Scalar::mul(a, b);
        self.add_assign(&p);
    }

    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }
}

impl Scalar for Rational {
    const MODE: ScalarMode = ScalarMode::ExactRational;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_frac(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn recip(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn to_f64(&self) -> f64 {
        // Ratio<BigInt>::to_f64 handles huge numerators/denominators without overflow.
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            if self.is_negative() {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        })
    }
    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
}

impl Scalar for f64 {
    const MODE: ScalarMode = ScalarMode::Float64;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn from_frac(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn recip(&self) -> Option<Self> {
        if *self == 0.0 {
            None
        } else {
            Some(1.0 / self)
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_f64(v: f64) -> Option<Self> {
        Some(v)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn mul_add_assign(&mut self, a: &Self, b: &Self) {
        *self = math::mul_add(*a, *b, *self);
    }
}

/// Converts an exact scalar to the float field.
pub fn rational_to_f64(r: &Rational) -> f64 {
    Scalar::to_f64(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_basics() {
        let a = <Rational as Scalar>::from_frac(1, 3);
        let b = <Rational as Scalar>::from_frac(2, 3);
        assert_eq!(Scalar::add(&a, &b), <Rational as Scalar>::one());
        assert!(Scalar::recip(&<Rational as Scalar>::zero()).is_none());
        assert_eq!(Scalar::recip(&a).unwrap(), <Rational as Scalar>::from_int(3));
        assert!((Scalar::to_f64(&a) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn float_mul_add() {
        let mut x = 1.0f64;
        x.mul_add_assign(&2.0, &3.0);
        assert_eq!(x, 7.0);
    }
}
