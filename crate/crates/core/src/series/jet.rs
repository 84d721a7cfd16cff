//! Truncated multivariate polynomials in the tangential variables.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::any::Any;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{Rational, Scalar, SeriesError};

/// Largest supported number of tangential variables (surface dimension up to 9).
pub const MAX_VARS: usize = 8;
/// Largest supported truncation degree; products of two in-range monomials never overflow a byte.
pub const MAX_DEGREE: u32 = 127;

/// Exponent multi-index packed one byte per variable.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(u64);

impl Monomial {
    pub const ONE: Monomial = Monomial(0);

    pub fn from_exponents(exps: &[u32]) -> Option<Monomial> {
        if exps.len() > MAX_VARS {
            return None;
        }
        let mut packed = 0u64;
        for (v, &e) in exps.iter().enumerate() {
            if e > MAX_DEGREE {
                return None;
            }
            packed |= (e as u64) << (8 * v);
        }
        Some(Monomial(packed))
    }

    pub fn var(v: usize) -> Monomial {
        Monomial(1u64 << (8 * v))
    }

    #[inline]
    pub fn exponent(self, v: usize) -> u32 {
        ((self.0 >> (8 * v)) & 0xff) as u32
    }

    #[inline]
    pub fn degree(self) -> u32 {
        let mut x = self.0;
        let mut d = 0;
        while x != 0 {
            d += (x & 0xff) as u32;
            x >>= 8;
        }
        d
    }

    #[inline]
    pub fn mul(self, other: Monomial) -> Monomial {
        Monomial(self.0 + other.0)
    }

    pub fn exponents(self, num_vars: usize) -> Vec<u32> {
        (0..num_vars).map(|v| self.exponent(v)).collect()
    }

    /// Lowers the exponent of `v` by one, or `None` if it is already zero.
    #[inline]
    pub fn lower(self, v: usize) -> Option<Monomial> {
        if self.exponent(v) == 0 {
            None
        } else {
            Some(Monomial(self.0 - (1u64 << (8 * v))))
        }
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y^{:?}", self.exponents(MAX_VARS))
    }
}

/// Truncated polynomial jet `Σ c_β y^β`, `|β| ≤ max_degree`, in `num_vars` variables.
///
/// The coefficient map never stores zeros, so the zero jet has an empty map and
/// structural equality is polynomial equality.
#[derive(Clone, PartialEq)]
pub struct PolyJet<S> {
    num_vars: usize,
    max_degree: u32,
    terms: BTreeMap<Monomial, S>,
}

impl<S: Scalar> PolyJet<S> {
    pub fn zero(num_vars: usize, max_degree: u32) -> Self {
        assert!(num_vars <= MAX_VARS, "at most {MAX_VARS} tangential variables");
        assert!(max_degree <= MAX_DEGREE, "jet degree above {MAX_DEGREE}");
        PolyJet {
            num_vars,
            max_degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, max_degree: u32, c: S) -> Self {
        let mut jet = Self::zero(num_vars, max_degree);
        jet.insert(Monomial::ONE, c);
        jet
    }

    pub fn one(num_vars: usize, max_degree: u32) -> Self {
        Self::constant(num_vars, max_degree, S::one())
    }

    /// The coordinate function `y^{v+1}` (zero-based variable index).
    pub fn variable(num_vars: usize, max_degree: u32, v: usize) -> Self {
        assert!(v < num_vars);
        let mut jet = Self::zero(num_vars, max_degree);
        if max_degree >= 1 {
            jet.insert(Monomial::var(v), S::one());
        }
        jet
    }

    /// Builds a jet from `(exponents, coefficient)` pairs, summing duplicates and
    /// dropping monomials above `max_degree`.
    pub fn from_terms<I>(num_vars: usize, max_degree: u32, terms: I) -> Result<Self, SeriesError>
    where
        I: IntoIterator<Item = (Vec<u32>, S)>,
    {
        let mut jet = Self::zero(num_vars, max_degree);
        for (exps, c) in terms {
            if exps.len() != num_vars {
                return Err(SeriesError::BadExponent { len: exps.len(), num_vars });
            }
            let m = Monomial::from_exponents(&exps)
                .ok_or(SeriesError::BadExponent { len: exps.len(), num_vars })?;
            jet.accumulate(m, &c);
        }
        Ok(jet)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: Monomial) -> Option<&S> {
        self.terms.get(&m)
    }

    pub fn constant_term(&self) -> S {
        self.terms.get(&Monomial::ONE).cloned().unwrap_or_else(S::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Monomial, &S)> + '_ {
        self.terms.iter().map(|(m, c)| (*m, c))
    }

    /// Highest total degree actually present, `None` for the zero jet.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    fn insert(&mut self, m: Monomial, c: S) {
        if m.degree() <= self.max_degree && !c.is_zero() {
            self.terms.insert(m, c);
        }
    }

    fn accumulate(&mut self, m: Monomial, c: &S) {
        if m.degree() > self.max_degree || c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(slot) => {
                slot.add_assign(c);
                if slot.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    pub fn check_compatible(&self, other: &Self) -> Result<(), SeriesError> {
        if self.num_vars != other.num_vars || self.max_degree != other.max_degree {
            return Err(SeriesError::IncompatibleJets {
                left: (self.num_vars, self.max_degree),
                right: (other.num_vars, other.max_degree),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.add_in_place(other);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.accumulate(*m, &c.neg());
        }
        Ok(out)
    }

    /// In-place addition; callers guarantee compatibility.
    pub(crate) fn add_in_place(&mut self, other: &Self) {
        debug_assert!(self.check_compatible(other).is_ok());
        for (m, c) in &other.terms {
            self.accumulate(*m, c);
        }
    }

    pub fn neg(&self) -> Self {
        PolyJet {
            num_vars: self.num_vars,
            max_degree: self.max_degree,
            terms: self.terms.iter().map(|(m, c)| (*m, c.neg())).collect(),
        }
    }

    pub fn scale(&self, s: &S) -> Self {
        if s.is_zero() {
            return Self::zero(self.num_vars, self.max_degree);
        }
        let mut out = Self::zero(self.num_vars, self.max_degree);
        for (m, c) in &self.terms {
            out.insert(*m, c.mul(s));
        }
        out
    }

    /// Truncated product; monomials above `max_degree` are dropped.
    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.num_vars, self.max_degree);
        self.mul_acc_into(other, &mut out);
        out
    }

    /// `acc += self * other`, truncated.
    pub(crate) fn mul_acc_into(&self, other: &Self, acc: &mut Self) {
        if self.terms.is_empty() || other.terms.is_empty() {
            return;
        }
        if let (Some(a), Some(b), Some(out)) = (
            (self as &dyn Any).downcast_ref::<PolyJet<Rational>>(),
            (other as &dyn Any).downcast_ref::<PolyJet<Rational>>(),
            (acc as &mut dyn Any).downcast_mut::<PolyJet<Rational>>(),
        ) {
            return rational_mul_acc(a, b, out);
        }
        let d = self.max_degree;
        let b: Vec<(Monomial, u32, &S)> =
            other.terms.iter().map(|(m, c)| (*m, m.degree(), c)).collect();
        for (ma, ca) in &self.terms {
            let da = ma.degree();
            for &(mb, db, cb) in &b {
                if da + db > d {
                    continue;
                }
                let m = ma.mul(mb);
                match acc.terms.get_mut(&m) {
                    Some(slot) => slot.mul_add_assign(ca, cb),
                    None => {
                        let p = ca.mul(cb);
                        if !p.is_zero() {
                            acc.terms.insert(m, p);
                        }
                    }
                }
            }
        }
        acc.terms.retain(|_, c| !c.is_zero());
    }

    /// Truncated inverse via the Neumann series `1/(c(1+e)) = c⁻¹ Σ (−e)^p`.
    pub fn inverse(&self) -> Result<Self, SeriesError> {
        let c = self.constant_term();
        let c_inv = c.recip().ok_or(SeriesError::ZeroConstantTerm)?;
        // e = self/c - 1
        let mut e = self.scale(&c_inv);
        e.terms.remove(&Monomial::ONE);
        let minus_e = e.neg();
        let mut sum = Self::one(self.num_vars, self.max_degree);
        let mut power = sum.clone();
        for _ in 0..self.max_degree {
            power = power.mul_unchecked(&minus_e);
            if power.is_zero() {
                break;
            }
            sum.add_in_place(&power);
        }
        Ok(sum.scale(&c_inv))
    }

    /// Partial derivative in variable `v`; the degree drops by one.
    pub fn diff(&self, v: usize) -> Self {
        assert!(v < self.num_vars, "variable index out of range");
        let mut out = Self::zero(self.num_vars, self.max_degree);
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if let Some(lower) = m.lower(v) {
                out.insert(lower, c.mul(&S::from_int(e as i64)));
            }
        }
        out
    }

    /// Evaluates at a point; exact scalars are converted to `f64` first.
    pub fn eval(&self, y: &[f64]) -> f64 {
        assert_eq!(y.len(), self.num_vars, "evaluation point has the wrong dimension");
        if self.terms.is_empty() {
            return 0.0;
        }
        let d = self.max_degree as usize;
        // powers[v][e] = y_v^e
        let powers: Vec<Vec<f64>> = y
            .iter()
            .map(|&x| {
                let mut p = Vec::with_capacity(d + 1);
                let mut acc = 1.0;
                for _ in 0..=d {
                    p.push(acc);
                    acc *= x;
                }
                p
            })
            .collect();
        let mut sum = 0.0;
        for (m, c) in &self.terms {
            let mut term = c.to_f64();
            for (v, pw) in powers.iter().enumerate() {
                term *= pw[m.exponent(v) as usize];
            }
            sum += term;
        }
        sum
    }

    /// Re-expands the polynomial about `center`: returns `q(z) = p(center + z)`.
    ///
    /// Exact for the stored polynomial; the result is truncated at the same degree,
    /// so for a jet that is itself a truncation only the low-degree part is meaningful.
    pub fn recenter(&self, center: &[S]) -> Self {
        assert_eq!(center.len(), self.num_vars);
        let nv = self.num_vars;
        let d = self.max_degree;
        let mut out = Self::zero(nv, d);
        // (c_v + z_v)^e expanded once per (variable, exponent).
        let mut binom_cache: BTreeMap<(usize, u32), Self> = BTreeMap::new();
        for (m, coef) in &self.terms {
            let mut prod = Self::constant(nv, d, coef.clone());
            for v in 0..nv {
                let e = m.exponent(v);
                if e == 0 {
                    continue;
                }
                let factor = binom_cache
                    .entry((v, e))
                    .or_insert_with(|| {
                        let lin = {
                            let mut l = Self::constant(nv, d, center[v].clone());
                            l.add_in_place(&Self::variable(nv, d, v));
                            l
                        };
                        let mut p = Self::one(nv, d);
                        for _ in 0..e {
                            p = p.mul_unchecked(&lin);
                        }
                        p
                    })
                    .clone();
                prod = prod.mul_unchecked(&factor);
            }
            out.add_in_place(&prod);
        }
        out
    }

    /// Drops monomials above `degree` (the truncation order itself is unchanged).
    pub fn truncated(&self, degree: u32) -> Self {
        let mut out = self.clone();
        out.terms.retain(|m, _| m.degree() <= degree);
        out
    }

    /// Same coefficients under a new truncation degree.
    pub fn with_max_degree(&self, max_degree: u32) -> Self {
        let mut out = Self::zero(self.num_vars, max_degree);
        for (m, c) in &self.terms {
            out.insert(*m, c.clone());
        }
        out
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PolyJet<T> {
        let mut out = PolyJet::<T>::zero(self.num_vars, self.max_degree);
        for (m, c) in &self.terms {
            out.insert(*m, f(c));
        }
        out
    }

    pub fn to_f64(&self) -> PolyJet<f64> {
        self.map_scalar(|c| c.to_f64())
    }

    /// Largest coefficient magnitude; zero for the zero jet.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.abs_f64()).fold(0.0, f64::max)
    }

    /// `sup_{|y| ≤ rho}` bound by the weighted ℓ¹ norm `Σ |c_β| ρ^{|β|}`.
    pub fn weighted_l1(&self, rho: f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| c.abs_f64() * crate::math::powi(rho, m.degree() as i32))
            .sum()
    }
}

impl<S: Scalar> fmt::Debug for PolyJet<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:?})", c)?;
            for v in 0..self.num_vars {
                let e = m.exponent(v);
                if e > 0 {
                    write!(f, "·y{}^{}", v + 1, e)?;
                }
            }
        }
        Ok(())
    }
}

/// Integer numerators over the lcm of the denominators of every jet given.
pub(crate) fn lift<'a>(jets: impl Iterator<Item = &'a PolyJet<Rational>> + Clone) -> (BigInt, Vec<IntTerms>) {
    let mut den = BigInt::from(1);
    for c in jets.clone().flat_map(|j| j.terms.values()) {
        if !c.denom().is_one() {
            den = den.lcm(c.denom());
        }
    }
    let lifted = jets
        .map(|j| j.terms.iter().map(|(m, c)| (*m, m.degree(), c.numer() * (&den / c.denom()))).collect())
        .collect();
    (den, lifted)
}

/// Monomials with their degrees and integer coefficients.
pub(crate) type IntTerms = Vec<(Monomial, u32, BigInt)>;

/// `sums += a * b` on integer images, truncated at degree `d`.
pub(crate) fn int_mul_acc(a: &IntTerms, b: &IntTerms, d: u32, sums: &mut BTreeMap<Monomial, BigInt>) {
    for (ma, ga, x) in a {
        for (mb, gb, y) in b {
            if ga + gb <= d {
                *sums.entry(ma.mul(*mb)).or_insert_with(BigInt::zero) += x * y;
            }
        }
    }
}

impl PolyJet<Rational> {
    /// The jet `Σ (v / den) y^m`, normalizing each coefficient once.
    pub(crate) fn from_int_sums(num_vars: usize, max_degree: u32, sums: BTreeMap<Monomial, BigInt>, den: &BigInt) -> Self {
        let terms =
            sums.into_iter().filter(|(_, v)| !v.is_zero()).map(|(m, v)| (m, Rational::new(v, den.clone()))).collect();
        PolyJet { num_vars, max_degree, terms }
    }
}

/// Fraction-free `acc += a * b`: products are summed as integers and each
/// output coefficient is normalized once.
fn rational_mul_acc(a: &PolyJet<Rational>, b: &PolyJet<Rational>, acc: &mut PolyJet<Rational>) {
    let (da, ia) = lift(core::iter::once(a));
    let (db, ib) = lift(core::iter::once(b));
    let mut sums = BTreeMap::new();
    int_mul_acc(&ia[0], &ib[0], a.max_degree, &mut sums);
    let prod = PolyJet::from_int_sums(a.num_vars, a.max_degree, sums, &(da * db));
    for (m, v) in prod.terms {
        match acc.terms.get_mut(&m) {
            Some(slot) => {
                *slot += v;
                if Zero::is_zero(slot) {
                    acc.terms.remove(&m);
                }
            }
            None => {
                acc.terms.insert(m, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::Rational;
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_frac(n, d)
    }

    fn jet(nv: usize, d: u32, terms: &[(&[u32], i64)]) -> PolyJet<Rational> {
        PolyJet::from_terms(nv, d, terms.iter().map(|(e, c)| (e.to_vec(), q(*c, 1)))).unwrap()
    }

    #[test]
    fn difference_of_squares() {
        let a = jet(1, 2, &[(&[0], 1), (&[1], 1)]);
        let b = jet(1, 2, &[(&[0], 1), (&[1], -1)]);
        let expected = jet(1, 2, &[(&[0], 1), (&[2], -1)]);
        assert_eq!(a.mul(&b).unwrap(), expected);
    }

    #[test]
    fn annihilator() {
        let a = jet(2, 3, &[(&[0, 0], 4), (&[1, 2], 7)]);
        let z = PolyJet::zero(2, 3);
        let p = a.mul(&z).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.len(), 0);
    }

    #[test]
    fn truncation_drops_degree_two() {
        let a = jet(2, 1, &[(&[0, 0], 1), (&[1, 0], 1), (&[0, 1], 1)]);
        let expected = jet(2, 1, &[(&[0, 0], 1), (&[1, 0], 2), (&[0, 1], 2)]);
        assert_eq!(a.mul(&a).unwrap(), expected);
    }

    #[test]
    fn incompatible_operands() {
        let a = PolyJet::<Rational>::one(1, 2);
        let b = PolyJet::<Rational>::one(2, 2);
        let c = PolyJet::<Rational>::one(1, 3);
        assert!(matches!(a.mul(&b), Err(SeriesError::IncompatibleJets { .. })));
        assert!(matches!(a.add(&c), Err(SeriesError::IncompatibleJets { .. })));
    }

    #[test]
    fn inverse_of_scalar_and_geometric() {
        let two = PolyJet::constant(1, 3, q(2, 1));
        assert_eq!(two.inverse().unwrap(), PolyJet::constant(1, 3, q(1, 2)));
        let a = jet(1, 3, &[(&[0], 1), (&[1], 1)]);
        let expected = jet(1, 3, &[(&[0], 1), (&[1], -1), (&[2], 1), (&[3], -1)]);
        assert_eq!(a.inverse().unwrap(), expected);
    }

    #[test]
    fn inverse_of_zero_constant_fails() {
        let a = jet(1, 3, &[(&[1], 1)]);
        assert_eq!(a.inverse(), Err(SeriesError::ZeroConstantTerm));
    }

    #[test]
    fn diff_and_eval() {
        // 3 y1^2 y2 + y2
        let a = jet(2, 4, &[(&[2, 1], 3), (&[0, 1], 1)]);
        assert_eq!(a.diff(0), jet(2, 4, &[(&[1, 1], 6)]));
        assert_eq!(a.diff(1), jet(2, 4, &[(&[2, 0], 3), (&[0, 0], 1)]));
        assert!((a.eval(&[2.0, 0.5]) - (3.0 * 4.0 * 0.5 + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn recenter_shifts_polynomial() {
        // p = y^2 + y, about c = 2: (2+z)^2 + (2+z) = 6 + 5z + z^2
        let p = jet(1, 4, &[(&[2], 1), (&[1], 1)]);
        let shifted = p.recenter(&[q(2, 1)]);
        assert_eq!(shifted, jet(1, 4, &[(&[0], 6), (&[1], 5), (&[2], 1)]));
    }
}
