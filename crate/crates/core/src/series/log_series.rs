//! Truncated series `Σ c_{i,j}(y') t^i (log t)^j` with jet coefficients.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::any::Any;
use core::fmt;

use num_bigint::BigInt;

use super::jet::{int_mul_acc, lift, Monomial};
use super::{PolyJet, Rational, Scalar, SeriesError};
use crate::math;

/// Derivative direction for [`LogSeries::diff`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    /// The normal (height) coordinate `t = yⁿ`.
    T,
    /// Tangential coordinate `y^{β+1}` (zero-based).
    Tangential(usize),
}

/// Truncated log-polyhomogeneous series in `t` with [`PolyJet`] coefficients.
///
/// Invariants: every stored slot `(i, j)` has `i ≤ t_order`, `j ≤ log_cap`, and
/// no slot `(0, j ≥ 1)` is stored, so the series extends continuously to `t = 0`.
#[derive(Clone, PartialEq)]
pub struct LogSeries<S> {
    num_vars: usize,
    max_degree: u32,
    t_order: u32,
    log_cap: u32,
    terms: BTreeMap<(u32, u32), PolyJet<S>>,
}

impl<S: Scalar> LogSeries<S> {
    pub fn zero(num_vars: usize, max_degree: u32, t_order: u32, log_cap: u32) -> Self {
        LogSeries {
            num_vars,
            max_degree,
            t_order,
            log_cap,
            terms: BTreeMap::new(),
        }
    }

    /// The series `jet · t^i (log t)^j`.
    pub fn monomial(
        jet: PolyJet<S>,
        i: u32,
        j: u32,
        t_order: u32,
        log_cap: u32,
    ) -> Result<Self, SeriesError> {
        let mut s = Self::zero(jet.num_vars(), jet.max_degree(), t_order, log_cap);
        s.set(i, j, jet)?;
        Ok(s)
    }

    pub fn from_jet(jet: PolyJet<S>, t_order: u32, log_cap: u32) -> Self {
        let mut s = Self::zero(jet.num_vars(), jet.max_degree(), t_order, log_cap);
        if !jet.is_zero() {
            s.terms.insert((0, 0), jet);
        }
        s
    }

    pub fn constant(num_vars: usize, max_degree: u32, t_order: u32, log_cap: u32, c: S) -> Self {
        Self::from_jet(PolyJet::constant(num_vars, max_degree, c), t_order, log_cap)
    }

    /// Zero with the same truncation parameters.
    pub fn zero_like(&self) -> Self {
        Self::zero(self.num_vars, self.max_degree, self.t_order, self.log_cap)
    }

    /// One with the same truncation parameters.
    pub fn one_like(&self) -> Self {
        Self::constant(self.num_vars, self.max_degree, self.t_order, self.log_cap, S::one())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }
    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }
    pub fn t_order(&self) -> u32 {
        self.t_order
    }
    pub fn log_cap(&self) -> u32 {
        self.log_cap
    }

    /// Largest log power actually stored.
    pub fn max_log(&self) -> u32 {
        self.terms.keys().map(|&(_, j)| j).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, i: u32, j: u32) -> Option<&PolyJet<S>> {
        self.terms.get(&(i, j))
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), &PolyJet<S>)> + '_ {
        self.terms.iter().map(|(k, v)| (*k, v))
    }

    /// Slots at t-exponent `i`, ordered by increasing log power.
    pub fn order(&self, i: u32) -> impl Iterator<Item = (u32, &PolyJet<S>)> + '_ {
        self.terms.range((i, 0)..=(i, u32::MAX)).map(|(&(_, j), c)| (j, c))
    }

    /// Lowest stored slot.
    pub fn leading(&self) -> Option<((u32, u32), &PolyJet<S>)> {
        self.terms.iter().next().map(|(k, v)| (*k, v))
    }

    /// Replaces the coefficient of `t^i (log t)^j`. Slots above `t_order` are
    /// silently dropped (truncation); log slots without a positive t power are rejected.
    pub fn set(&mut self, i: u32, j: u32, jet: PolyJet<S>) -> Result<(), SeriesError> {
        self.check_jet(&jet)?;
        if jet.is_zero() {
            self.terms.remove(&(i, j));
            return Ok(());
        }
        if i == 0 && j >= 1 {
            return Err(SeriesError::LogWithoutTPower { j });
        }
        if j > self.log_cap {
            return Err(SeriesError::LogOverflow { i, j, cap: self.log_cap });
        }
        if i > self.t_order {
            return Ok(());
        }
        self.terms.insert((i, j), jet);
        Ok(())
    }

    /// Adds `jet · t^i (log t)^j` in place.
    pub fn add_term(&mut self, i: u32, j: u32, jet: &PolyJet<S>) -> Result<(), SeriesError> {
        self.check_jet(jet)?;
        if jet.is_zero() || i > self.t_order {
            return Ok(());
        }
        if i == 0 && j >= 1 {
            return Err(SeriesError::LogWithoutTPower { j });
        }
        if j > self.log_cap {
            return Err(SeriesError::LogOverflow { i, j, cap: self.log_cap });
        }
        self.accumulate((i, j), jet);
        Ok(())
    }

    fn accumulate(&mut self, key: (u32, u32), jet: &PolyJet<S>) {
        match self.terms.get_mut(&key) {
            Some(slot) => {
                slot.add_in_place(jet);
                if slot.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                if !jet.is_zero() {
                    self.terms.insert(key, jet.clone());
                }
            }
        }
    }

    fn check_jet(&self, jet: &PolyJet<S>) -> Result<(), SeriesError> {
        if jet.num_vars() != self.num_vars || jet.max_degree() != self.max_degree {
            return Err(SeriesError::IncompatibleJets {
                left: (self.num_vars, self.max_degree),
                right: (jet.num_vars(), jet.max_degree()),
            });
        }
        Ok(())
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

    /// Sum; the result carries the smaller truncation order and the larger log cap.
    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.t_order = self.t_order.min(other.t_order);
        out.log_cap = self.log_cap.max(other.log_cap);
        out.terms.retain(|&(i, _), _| i <= out.t_order);
        for (&(i, j), c) in &other.terms {
            if i <= out.t_order {
                out.accumulate((i, j), c);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.add(&other.neg())
    }

    /// In-place `self += other`; `other` terms above `self.t_order` are dropped.
    pub fn add_assign(&mut self, other: &Self) -> Result<(), SeriesError> {
        self.check_compatible(other)?;
        for (&(i, j), c) in &other.terms {
            if i <= self.t_order {
                if j > self.log_cap {
                    return Err(SeriesError::LogOverflow { i, j, cap: self.log_cap });
                }
                self.accumulate((i, j), c);
            }
        }
        Ok(())
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut out = Self::zero(self.num_vars, self.max_degree, self.t_order, self.log_cap);
        if s.is_zero() {
            return out;
        }
        for (&k, c) in &self.terms {
            let v = c.scale(s);
            if !v.is_zero() {
                out.terms.insert(k, v);
            }
        }
        out
    }

    /// Multiplies every coefficient by a jet.
    pub fn scale_jet(&self, jet: &PolyJet<S>) -> Result<Self, SeriesError> {
        self.check_jet(jet)?;
        let mut out = Self::zero(self.num_vars, self.max_degree, self.t_order, self.log_cap);
        for (&k, c) in &self.terms {
            let v = c.mul_unchecked(jet);
            if !v.is_zero() {
                out.terms.insert(k, v);
            }
        }
        Ok(out)
    }

    /// Truncated product: `t^{i₁}L^{j₁}·t^{i₂}L^{j₂} = t^{i₁+i₂}L^{j₁+j₂}`.
    ///
    /// Fails with [`SeriesError::LogOverflow`] if a nonzero product would exceed the cap.
    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_compatible(other)?;
        let t_order = self.t_order.min(other.t_order);
        let log_cap = self.log_cap.max(other.log_cap);
        let mut out = Self::zero(self.num_vars, self.max_degree, t_order, log_cap);
        if self.terms.is_empty() || other.terms.is_empty() {
            return Ok(out);
        }
        if let (Some(a), Some(b)) =
            ((self as &dyn Any).downcast_ref::<LogSeries<Rational>>(), (other as &dyn Any).downcast_ref::<LogSeries<Rational>>())
        {
            let prod: Box<dyn Any> = Box::new(rational_mul(a, b, t_order, log_cap));
            return *prod.downcast::<Result<Self, SeriesError>>().expect("same scalar type");
        }
        let rhs: Vec<((u32, u32), &PolyJet<S>)> = other.terms.iter().map(|(k, v)| (*k, v)).collect();
        for (&(i1, j1), a) in &self.terms {
            if i1 > t_order {
                break;
            }
            for &((i2, j2), b) in &rhs {
                let i = i1 + i2;
                if i > t_order {
                    break;
                }
                let j = j1 + j2;
                let slot = out
                    .terms
                    .entry((i, j))
                    .or_insert_with(|| PolyJet::zero(self.num_vars, self.max_degree));
                a.mul_acc_into(b, slot);
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        if let Some(&(i, j)) = out.terms.keys().find(|&&(_, j)| j > log_cap) {
            return Err(SeriesError::LogOverflow { i, j, cap: log_cap });
        }
        Ok(out)
    }

    /// Slots at t-exponent `i` of the untruncated product `self · other`.
    ///
    /// Truncation orders of the operands are ignored; the caller vouches that
    /// every contributing slot is present.
    pub fn product_layer(&self, other: &Self, i: u32) -> Result<BTreeMap<u32, PolyJet<S>>, SeriesError> {
        self.check_compatible(other)?;
        let mut out: BTreeMap<u32, PolyJet<S>> = BTreeMap::new();
        for (&(i1, j1), a) in self.terms.range(..=(i, u32::MAX)) {
            for (&(_, j2), b) in other.terms.range((i - i1, 0)..=(i - i1, u32::MAX)) {
                let slot = out
                    .entry(j1 + j2)
                    .or_insert_with(|| PolyJet::zero(self.num_vars, self.max_degree));
                a.mul_acc_into(b, slot);
            }
        }
        out.retain(|_, c| !c.is_zero());
        Ok(out)
    }

    /// Multiplicative inverse up to the truncation order.
    ///
    /// Needs an invertible `(0, 0)` jet; solved slot by slot in increasing `i`.
    pub fn inverse(&self) -> Result<Self, SeriesError> {
        let a0 = match self.terms.get(&(0, 0)) {
            Some(c) => c.inverse()?,
            None => return Err(SeriesError::ZeroConstantTerm),
        };
        let mut out = Self::zero(self.num_vars, self.max_degree, self.t_order, self.log_cap);
        out.terms.insert((0, 0), a0.clone());
        let rest: Vec<((u32, u32), &PolyJet<S>)> =
            self.terms.iter().filter(|(k, _)| **k != (0, 0)).map(|(k, v)| (*k, v)).collect();
        for i in 1..=self.t_order {
            // b_i = -a0⁻¹ Σ_{i1 ≥ 1} a_{i1} b_{i - i1}, log levels tracked per slot.
            let mut acc: BTreeMap<u32, PolyJet<S>> = BTreeMap::new();
            for &((i1, j1), a) in &rest {
                if i1 > i {
                    break;
                }
                for (&(_, j2), b) in out.terms.range((i - i1, 0)..=(i - i1, u32::MAX)) {
                    let slot = acc
                        .entry(j1 + j2)
                        .or_insert_with(|| PolyJet::zero(self.num_vars, self.max_degree));
                    a.mul_acc_into(b, slot);
                }
            }
            for (j, c) in acc {
                let v = c.mul_unchecked(&a0).neg();
                if v.is_zero() {
                    continue;
                }
                if j > self.log_cap {
                    return Err(SeriesError::LogOverflow { i, j, cap: self.log_cap });
                }
                out.terms.insert((i, j), v);
            }
        }
        Ok(out)
    }

    /// The Euler operator `t ∂_t`: `c t^i L^j ↦ i c t^i L^j + j c t^i L^{j−1}`.
    ///
    /// Unlike [`diff`](Self::diff) in `t` it never leaves the invariant set.
    pub fn euler(&self) -> Self {
        let mut out = Self::zero(self.num_vars, self.max_degree, self.t_order, self.log_cap);
        for (&(i, j), c) in &self.terms {
            if i > 0 {
                out.accumulate((i, j), &c.scale(&S::from_int(i as i64)));
            }
            if j > 0 {
                out.accumulate((i, j - 1), &c.scale(&S::from_int(j as i64)));
            }
        }
        out
    }

    /// The slots at t-exponent `i` as a map from log power to jet.
    pub fn layer(&self, i: u32) -> BTreeMap<u32, PolyJet<S>> {
        self.order(i).map(|(j, c)| (j, c.clone())).collect()
    }

    /// Multiplies by `t^p`, dropping what falls beyond the truncation order.
    pub fn shift_t(&self, p: u32) -> Self {
        let mut out = Self::zero(self.num_vars, self.max_degree, self.t_order, self.log_cap);
        for (&(i, j), c) in &self.terms {
            if i + p <= self.t_order {
                out.terms.insert((i + p, j), c.clone());
            }
        }
        out
    }

    /// Same series under a new truncation order (terms above it are dropped).
    pub fn with_t_order(&self, t_order: u32) -> Self {
        let mut out = self.clone();
        out.t_order = t_order;
        out.terms.retain(|&(i, _), _| i <= t_order);
        out
    }

    pub fn with_log_cap(&self, log_cap: u32) -> Result<Self, SeriesError> {
        if let Some(&(i, j)) = self.terms.keys().find(|&&(_, j)| j > log_cap) {
            return Err(SeriesError::LogOverflow { i, j, cap: log_cap });
        }
        let mut out = self.clone();
        out.log_cap = log_cap;
        Ok(out)
    }

    /// Differentiates along `axis`.
    ///
    /// In `t`: `c t^i L^j ↦ i c t^{i−1} L^j + j c t^{i−1} L^{j−1}`; tangential axes act
    /// on the jets termwise.
    pub fn diff(&self, axis: Axis) -> Result<Self, SeriesError> {
        let mut out = Self::zero(self.num_vars, self.max_degree, self.t_order, self.log_cap);
        match axis {
            Axis::T => {
                for (&(i, j), c) in &self.terms {
                    if i == 0 {
                        if j == 0 {
                            continue;
                        }
                        return Err(SeriesError::LogWithoutTPower { j });
                    }
                    out.accumulate((i - 1, j), &c.scale(&S::from_int(i as i64)));
                    if j >= 1 {
                        out.accumulate((i - 1, j - 1), &c.scale(&S::from_int(j as i64)));
                    }
                }
                // c t L → c L + c: the (0, 1) slot would violate the invariant.
                if out.terms.keys().any(|&(i, j)| i == 0 && j >= 1) {
                    return Err(SeriesError::LogWithoutTPower { j: 1 });
                }
            }
            Axis::Tangential(v) => {
                if v >= self.num_vars {
                    return Err(SeriesError::BadAxis { axis: v, num_vars: self.num_vars });
                }
                for (&k, c) in &self.terms {
                    let d = c.diff(v);
                    if !d.is_zero() {
                        out.terms.insert(k, d);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `Σ c_{i,j}(y') t^i (ln t)^j` in floating point, Horner-accumulated in `t`
    /// at each log level. At `t = 0` the limit is returned when it exists.
    pub fn eval(&self, y: &[f64], t: f64) -> Result<f64, SeriesError> {
        if y.len() != self.num_vars {
            return Err(SeriesError::BadExponent { len: y.len(), num_vars: self.num_vars });
        }
        if t == 0.0 && !self.terms.keys().any(|&(i, j)| i == 0 && j > 0) {
            return Ok(self.terms.get(&(0, 0)).map(|c| c.eval(y)).unwrap_or(0.0));
        }
        if !(t > 0.0) {
            return Err(SeriesError::Domain { t });
        }
        let ln_t = math::ln(t);
        let max_j = self.max_log();
        let mut total = 0.0;
        let mut log_power = 1.0;
        for j in 0..=max_j {
            // Horner in t over the slots at this log level.
            let mut acc = 0.0;
            let mut top = self.t_order;
            let mut any = false;
            for i in (0..=self.t_order).rev() {
                if let Some(c) = self.terms.get(&(i, j)) {
                    acc = acc * math::powi(t, (top - i) as i32) + c.eval(y);
                    top = i;
                    any = true;
                }
            }
            if any {
                acc *= math::powi(t, top as i32);
                total += acc * log_power;
            }
            log_power *= ln_t;
        }
        Ok(total)
    }

    /// Evaluates every coefficient at `y'`, giving a one-variable table `(i, j) → value`.
    pub fn coefficients_at(&self, y: &[f64]) -> BTreeMap<(u32, u32), f64> {
        self.terms.iter().map(|(&k, c)| (k, c.eval(y))).collect()
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> LogSeries<T> {
        LogSeries {
            num_vars: self.num_vars,
            max_degree: self.max_degree,
            t_order: self.t_order,
            log_cap: self.log_cap,
            terms: self
                .terms
                .iter()
                .map(|(&k, c)| (k, c.map_scalar(f)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    pub fn to_f64(&self) -> LogSeries<f64> {
        self.map_scalar(|c| c.to_f64())
    }
}

impl<S: Scalar> fmt::Debug for LogSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(i, j), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "[{:?}]·t^{}", c, i)?;
            if j > 0 {
                write!(f, "·L^{}", j)?;
            }
        }
        Ok(())
    }
}

/// `(m − n)`-valued series; every component shares its truncation parameters.
#[derive(Clone, PartialEq)]
pub struct VectorLogSeries<S> {
    components: Vec<LogSeries<S>>,
}

impl<S: Scalar> fmt::Debug for VectorLogSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.components.iter()).finish()
    }
}

impl<S: Scalar> VectorLogSeries<S> {
    pub fn new(components: Vec<LogSeries<S>>) -> Result<Self, SeriesError> {
        let first = components.first().ok_or(SeriesError::EmptyVector)?;
        for c in &components[1..] {
            first.check_compatible(c)?;
            if c.t_order != first.t_order {
                return Err(SeriesError::IncompatibleTruncation {
                    left: first.t_order,
                    right: c.t_order,
                });
            }
        }
        Ok(VectorLogSeries { components })
    }

    pub fn codim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[LogSeries<S>] {
        &self.components
    }

    pub fn component(&self, s: usize) -> &LogSeries<S> {
        &self.components[s]
    }

    pub fn into_components(self) -> Vec<LogSeries<S>> {
        self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    pub fn eval(&self, y: &[f64], t: f64) -> Result<Vec<f64>, SeriesError> {
        self.components.iter().map(|c| c.eval(y, t)).collect()
    }

    pub fn t_order(&self) -> u32 {
        self.components[0].t_order
    }

    pub fn to_f64(&self) -> VectorLogSeries<f64> {
        VectorLogSeries {
            components: self.components.iter().map(|c| c.to_f64()).collect(),
        }
    }
}

/// Exact product over one shared denominator per operand; every output
/// coefficient is normalized once.
fn rational_mul(
    a: &LogSeries<Rational>,
    b: &LogSeries<Rational>,
    t_order: u32,
    log_cap: u32,
) -> Result<LogSeries<Rational>, SeriesError> {
    let (da, ia) = lift(a.terms.values());
    let (db, ib) = lift(b.terms.values());
    let rhs: Vec<(u32, u32)> = b.terms.keys().copied().collect();
    let mut sums: BTreeMap<(u32, u32), BTreeMap<Monomial, BigInt>> = BTreeMap::new();
    for (&(i1, j1), x) in a.terms.keys().zip(&ia) {
        if i1 > t_order {
            break;
        }
        for (&(i2, j2), y) in rhs.iter().zip(&ib) {
            if i1 + i2 > t_order {
                break;
            }
            int_mul_acc(x, y, a.max_degree, sums.entry((i1 + i2, j1 + j2)).or_default());
        }
    }
    let den = da * db;
    let mut out = LogSeries::zero(a.num_vars, a.max_degree, t_order, log_cap);
    for (k, s) in sums {
        let jet = PolyJet::from_int_sums(a.num_vars, a.max_degree, s, &den);
        if jet.is_zero() {
            continue;
        }
        if k.1 > log_cap {
            return Err(SeriesError::LogOverflow { i: k.0, j: k.1, cap: log_cap });
        }
        out.terms.insert(k, jet);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::Rational;
    use super::*;

    type Q = Rational;

    fn one(nv: usize, d: u32) -> PolyJet<Q> {
        PolyJet::one(nv, d)
    }

    fn mono(i: u32, j: u32, t_order: u32) -> LogSeries<Q> {
        LogSeries::monomial(one(1, 2), i, j, t_order, 4).unwrap()
    }

    #[test]
    fn log_exponents_add() {
        let a = mono(1, 1, 5);
        assert_eq!(a.mul(&a).unwrap(), mono(2, 2, 5));
    }

    #[test]
    fn additive_inverse() {
        let mut a = mono(2, 1, 5);
        a.add_term(3, 0, &PolyJet::variable(1, 2, 0)).unwrap();
        assert!(a.add(&a.neg()).unwrap().is_zero());
    }

    #[test]
    fn truncation_drops_t4() {
        let mut a = mono(0, 0, 3);
        a.add_term(2, 0, &one(1, 2)).unwrap();
        let mut b = mono(0, 0, 3);
        b.add_term(2, 0, &one(1, 2).neg()).unwrap();
        assert_eq!(a.mul(&b).unwrap(), mono(0, 0, 3));
    }

    #[test]
    fn log_overflow_is_an_error() {
        let a = LogSeries::monomial(one(1, 2), 1, 2, 6, 3).unwrap();
        assert!(matches!(a.mul(&a), Err(SeriesError::LogOverflow { i: 2, j: 4, cap: 3 })));
    }

    #[test]
    fn diff_t_product_rule() {
        let n = 3;
        let a = mono(n + 1, 1, 8);
        let mut expected = LogSeries::zero(1, 2, 8, 4);
        expected.add_term(n, 1, &one(1, 2).scale(&Q::from_int((n + 1) as i64))).unwrap();
        expected.add_term(n, 0, &one(1, 2)).unwrap();
        assert_eq!(a.diff(Axis::T).unwrap(), expected);
        assert!(mono(0, 0, 8).diff(Axis::T).unwrap().is_zero());
    }

    #[test]
    fn diff_tangential() {
        let a = LogSeries::monomial(PolyJet::variable(1, 2, 0), 2, 0, 4, 1).unwrap();
        assert_eq!(a.diff(Axis::Tangential(0)).unwrap(), mono(2, 0, 4).with_log_cap(1).unwrap());
        assert!(a.diff(Axis::Tangential(1)).is_err());
    }

    #[test]
    fn diff_of_t_log_t_is_rejected() {
        // ∂_t(t log t) = log t + 1 has a bare logarithm.
        let a = mono(1, 1, 4);
        assert!(matches!(a.diff(Axis::T), Err(SeriesError::LogWithoutTPower { .. })));
    }

    #[test]
    fn bare_log_is_rejected() {
        let mut a = LogSeries::<Q>::zero(1, 2, 4, 2);
        assert!(a.set(0, 1, one(1, 2)).is_err());
    }

    #[test]
    fn eval_examples() {
        let t2 = mono(2, 0, 4);
        assert!((t2.eval(&[0.3], 0.5).unwrap() - 0.25).abs() < 1e-15);
        let tl = mono(1, 1, 4);
        assert_eq!(tl.eval(&[0.0], 1.0).unwrap(), 0.0);
        assert_eq!(tl.eval(&[0.0], 0.0).unwrap(), 0.0);
        assert!(tl.eval(&[0.0], -1.0).is_err());
    }
}
