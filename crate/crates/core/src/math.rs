//! Elementary functions with a single implementation.
//!
//! Feature unification can switch `num_traits::Float` between `libm` and the
//! platform's math library, which differ in the last bits. Routing everything
//! through here keeps results identical across builds.

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

pub fn signum(x: f64) -> f64 {
    if x.is_nan() {
        x
    } else {
        libm::copysign(1.0, x)
    }
}

pub fn mul_add(a: f64, b: f64, c: f64) -> f64 {
    libm::fma(a, b, c)
}

/// Integer power by binary exponentiation.
pub fn powi(x: f64, n: i32) -> f64 {
    let mut base = x;
    let mut e = n.unsigned_abs();
    let mut acc = 1.0;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        e >>= 1;
        if e > 0 {
            base *= base;
        }
    }
    if n < 0 {
        1.0 / acc
    } else {
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_powers() {
        assert_eq!(powi(2.0, 10), 1024.0);
        assert_eq!(powi(2.0, -2), 0.25);
        assert_eq!(powi(-3.0, 3), -27.0);
        assert_eq!(powi(0.0, 0), 1.0);
    }

    #[test]
    fn signs() {
        assert_eq!(signum(-0.5), -1.0);
        assert_eq!(signum(0.0), 1.0);
        assert!(signum(f64::NAN).is_nan());
    }
}
