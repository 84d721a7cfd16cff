//! Exact views of the two scalar fields, used for input and for the series documents.

use hypermin_core::series::{rational_to_f64, Rational, Scalar};

pub trait Exact: Scalar {
    fn from_rational(r: &Rational) -> Self;

    /// The exact value; `None` for non-finite floats. Floats are dyadic, so this never rounds.
    fn to_rational(&self) -> Option<Rational>;
}

impl Exact for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
}

impl Exact for f64 {
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn to_rational(&self) -> Option<Rational> {
        <Rational as Scalar>::from_f64(*self)
    }
}

/// Decimal numerator and denominator strings.
pub fn num_den<S: Exact>(v: &S) -> (String, String) {
    match v.to_rational() {
        Some(r) => (r.numer().to_string(), r.denom().to_string()),
        None => (v.to_f64().to_string(), "0".to_string()),
    }
}
