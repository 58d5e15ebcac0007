//! Exact integer polynomials in `q` and Laurent polynomials in `q^(1/2)`.
//!
//! [`QPoly`] is a dense polynomial in `q` with ascending coefficients and is
//! what every R- and P-table stores. [`HalfLaurent`] is the scalar ring of the
//! Hecke modules: exponents are kept in units of one half, so `q^(k/2)` is the
//! key `k`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("cannot reflect a polynomial of degree {degree} inside degree bound {bound}")]
    DegreeExceedsBound { degree: usize, bound: usize },
    #[error("Laurent polynomial has odd or negative exponents and is not a polynomial in q")]
    NotAPolynomial,
}

/// Polynomial in `q` with integer coefficients, lowest degree first.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct QPoly {
    coeffs: Vec<BigInt>,
}

impl QPoly {
    pub fn zero() -> Self {
        QPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(1)
    }

    pub fn constant(c: i64) -> Self {
        Self::from_big(vec![BigInt::from(c)])
    }

    /// The indeterminate `q`.
    pub fn q() -> Self {
        Self::monomial(1, 1)
    }

    pub fn monomial(c: i64, degree: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); degree + 1];
        coeffs[degree] = BigInt::from(c);
        Self::from_big(coeffs)
    }

    pub fn from_coeffs<I: IntoIterator<Item = i64>>(coeffs: I) -> Self {
        Self::from_big(coeffs.into_iter().map(BigInt::from).collect())
    }

    pub fn from_big(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        QPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    /// `None` stands for the degree of the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: i64) -> BigInt {
        usize::try_from(k)
            .ok()
            .and_then(|k| self.coeffs.get(k).cloned())
            .unwrap_or_default()
    }

    pub fn eval_at_zero(&self) -> BigInt {
        self.coeff(0)
    }

    pub fn eval_at_one(&self) -> BigInt {
        self.coeffs.iter().sum()
    }

    /// `q^n * self(1/q)`.
    pub fn tilde(&self, n: usize) -> Result<QPoly, PolyError> {
        match self.degree() {
            None => Ok(QPoly::zero()),
            Some(d) if d > n => Err(PolyError::DegreeExceedsBound { degree: d, bound: n }),
            Some(_) => {
                let mut coeffs = vec![BigInt::zero(); n + 1];
                for (k, c) in self.coeffs.iter().enumerate() {
                    coeffs[n - k] = c.clone();
                }
                Ok(QPoly::from_big(coeffs))
            }
        }
    }

    /// Multiply by `q^k`.
    pub fn shift(&self, k: usize) -> QPoly {
        if self.is_zero() {
            return QPoly::zero();
        }
        let mut coeffs = vec![BigInt::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        QPoly { coeffs }
    }

    /// Terms of degree strictly below `bound`.
    pub fn truncate_below(&self, bound: usize) -> QPoly {
        QPoly::from_big(self.coeffs.iter().take(bound).cloned().collect())
    }

    pub fn scale(&self, c: &BigInt) -> QPoly {
        QPoly::from_big(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn pow(&self, n: u32) -> QPoly {
        (0..n).fold(QPoly::one(), |acc, _| &acc * self)
    }

    pub fn to_half_laurent(&self) -> HalfLaurent {
        HalfLaurent::from(self)
    }
}

impl From<i64> for QPoly {
    fn from(c: i64) -> Self {
        QPoly::constant(c)
    }
}

impl Add<&QPoly> for &QPoly {
    type Output = QPoly;
    fn add(self, rhs: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|k| {
                let a = self.coeffs.get(k);
                let b = rhs.coeffs.get(k);
                match (a, b) {
                    (Some(a), Some(b)) => a + b,
                    (Some(a), None) => a.clone(),
                    (None, Some(b)) => b.clone(),
                    (None, None) => BigInt::zero(),
                }
            })
            .collect();
        QPoly::from_big(coeffs)
    }
}

impl Neg for &QPoly {
    type Output = QPoly;
    fn neg(self) -> QPoly {
        QPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Sub<&QPoly> for &QPoly {
    type Output = QPoly;
    fn sub(self, rhs: &QPoly) -> QPoly {
        self + &(-rhs)
    }
}

impl Mul<&QPoly> for &QPoly {
    type Output = QPoly;
    fn mul(self, rhs: &QPoly) -> QPoly {
        if self.is_zero() || rhs.is_zero() {
            return QPoly::zero();
        }
        let mut coeffs = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        QPoly::from_big(coeffs)
    }
}

forward_binops!(QPoly);

impl AddAssign<&QPoly> for QPoly {
    fn add_assign(&mut self, rhs: &QPoly) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&QPoly> for QPoly {
    fn sub_assign(&mut self, rhs: &QPoly) {
        *self = &*self - rhs;
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<(i64, &BigInt)> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (k as i64 * 2, c))
            .collect();
        write_terms(f, &terms)
    }
}

impl fmt::Debug for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QPoly({self})")
    }
}

/// Laurent polynomial in `q^(1/2)`; keys are exponents counted in halves.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct HalfLaurent {
    terms: BTreeMap<i64, BigInt>,
}

impl HalfLaurent {
    pub fn zero() -> Self {
        HalfLaurent::default()
    }

    pub fn one() -> Self {
        Self::constant(1)
    }

    pub fn constant(c: i64) -> Self {
        Self::monomial(BigInt::from(c), 0)
    }

    pub fn monomial(c: BigInt, half_exponent: i64) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(half_exponent, c);
        }
        HalfLaurent { terms }
    }

    /// `q^(k/2)`.
    pub fn q_half_pow(k: i64) -> Self {
        Self::monomial(BigInt::one(), k)
    }

    /// `q^k`.
    pub fn q_pow(k: i64) -> Self {
        Self::q_half_pow(2 * k)
    }

    pub fn from_terms<I: IntoIterator<Item = (i64, i64)>>(terms: I) -> Self {
        let mut out = HalfLaurent::zero();
        for (e, c) in terms {
            out.add_term(e, BigInt::from(c));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigInt)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn coeff(&self, half_exponent: i64) -> BigInt {
        self.terms.get(&half_exponent).cloned().unwrap_or_default()
    }

    pub fn min_half_exponent(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_half_exponent(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    fn add_term(&mut self, e: i64, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e).or_default();
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    /// The involution `q^(1/2) -> q^(-1/2)`.
    pub fn bar(&self) -> HalfLaurent {
        HalfLaurent { terms: self.terms.iter().map(|(e, c)| (-e, c.clone())).collect() }
    }

    /// Multiply by `q^(k/2)`.
    pub fn shift_half(&self, k: i64) -> HalfLaurent {
        HalfLaurent { terms: self.terms.iter().map(|(e, c)| (e + k, c.clone())).collect() }
    }

    pub fn scale(&self, c: &BigInt) -> HalfLaurent {
        if c.is_zero() {
            return HalfLaurent::zero();
        }
        HalfLaurent { terms: self.terms.iter().map(|(e, a)| (*e, a * c)).collect() }
    }

    /// Back to `Z[q]`, if every exponent is a nonnegative integer.
    pub fn to_qpoly(&self) -> Result<QPoly, PolyError> {
        if self.terms.keys().any(|e| *e < 0 || e % 2 != 0) {
            return Err(PolyError::NotAPolynomial);
        }
        let top = self.max_half_exponent().map_or(0, |e| e / 2 + 1) as usize;
        let mut coeffs = vec![BigInt::zero(); top];
        for (e, c) in &self.terms {
            coeffs[(*e / 2) as usize] = c.clone();
        }
        Ok(QPoly::from_big(coeffs))
    }
}

impl From<&QPoly> for HalfLaurent {
    fn from(p: &QPoly) -> Self {
        HalfLaurent {
            terms: p
                .coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(k, c)| (2 * k as i64, c.clone()))
                .collect(),
        }
    }
}

impl From<QPoly> for HalfLaurent {
    fn from(p: QPoly) -> Self {
        HalfLaurent::from(&p)
    }
}

impl From<i64> for HalfLaurent {
    fn from(c: i64) -> Self {
        HalfLaurent::constant(c)
    }
}

impl Add<&HalfLaurent> for &HalfLaurent {
    type Output = HalfLaurent;
    fn add(self, rhs: &HalfLaurent) -> HalfLaurent {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl Neg for &HalfLaurent {
    type Output = HalfLaurent;
    fn neg(self) -> HalfLaurent {
        HalfLaurent { terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect() }
    }
}

impl Sub<&HalfLaurent> for &HalfLaurent {
    type Output = HalfLaurent;
    fn sub(self, rhs: &HalfLaurent) -> HalfLaurent {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c);
        }
        out
    }
}

impl Mul<&HalfLaurent> for &HalfLaurent {
    type Output = HalfLaurent;
    fn mul(self, rhs: &HalfLaurent) -> HalfLaurent {
        let mut out = HalfLaurent::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        out
    }
}

forward_binops!(HalfLaurent);

impl AddAssign<&HalfLaurent> for HalfLaurent {
    fn add_assign(&mut self, rhs: &HalfLaurent) {
        for (e, c) in &rhs.terms {
            self.add_term(*e, c.clone());
        }
    }
}

impl SubAssign<&HalfLaurent> for HalfLaurent {
    fn sub_assign(&mut self, rhs: &HalfLaurent) {
        for (e, c) in &rhs.terms {
            self.add_term(*e, -c);
        }
    }
}

impl fmt::Display for HalfLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<(i64, &BigInt)> = self.terms.iter().rev().map(|(e, c)| (*e, c)).collect();
        write_terms(f, &terms)
    }
}

impl fmt::Debug for HalfLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HalfLaurent({self})")
    }
}

fn write_power(f: &mut fmt::Formatter<'_>, half_exponent: i64) -> fmt::Result {
    match half_exponent {
        2 => write!(f, "q"),
        e if e % 2 == 0 && e > 0 => write!(f, "q^{}", e / 2),
        e if e % 2 == 0 => write!(f, "q^({})", e / 2),
        e => write!(f, "q^({e}/2)"),
    }
}

// Terms arrive highest exponent first.
fn write_terms(f: &mut fmt::Formatter<'_>, terms: &[(i64, &BigInt)]) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    for (i, (e, c)) in terms.iter().enumerate() {
        let negative = c.is_negative();
        let abs = c.abs();
        match (i, negative) {
            (0, true) => write!(f, "-")?,
            (0, false) => {}
            (_, true) => write!(f, " - ")?,
            (_, false) => write!(f, " + ")?,
        }
        if *e == 0 {
            write!(f, "{abs}")?;
        } else {
            if !abs.is_one() {
                write!(f, "{abs}")?;
            }
            write_power(f, *e)?;
        }
    }
    Ok(())
}

/// JSON form of an integer: a number when it fits in `i64`, otherwise a
/// decimal string.
pub(crate) fn bigint_to_json(c: &BigInt) -> serde_json::Value {
    match c.to_i64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::String(c.to_string()),
    }
}

pub(crate) fn bigint_from_json(v: &serde_json::Value) -> Option<BigInt> {
    match v {
        serde_json::Value::Number(n) => n.as_i64().map(BigInt::from),
        serde_json::Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

impl Serialize for QPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let values: Vec<serde_json::Value> = self.coeffs.iter().map(bigint_to_json).collect();
        values.serialize(s)
    }
}

impl<'de> Deserialize<'de> for QPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let values = Vec::<serde_json::Value>::deserialize(d)?;
        let coeffs = values
            .iter()
            .map(|v| bigint_from_json(v).ok_or_else(|| D::Error::custom("invalid coefficient")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(QPoly::from_big(coeffs))
    }
}

impl Serialize for HalfLaurent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let values: Vec<(i64, serde_json::Value)> =
            self.terms.iter().map(|(e, c)| (*e, bigint_to_json(c))).collect();
        values.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HalfLaurent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let values = Vec::<(i64, serde_json::Value)>::deserialize(d)?;
        let mut out = HalfLaurent::zero();
        for (e, v) in values {
            let c = bigint_from_json(&v).ok_or_else(|| D::Error::custom("invalid coefficient"))?;
            out.add_term(e, c);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q_minus_one() -> QPoly {
        QPoly::from_coeffs([-1, 1])
    }

    #[test]
    fn ring_examples() {
        let a = q_minus_one().to_half_laurent();
        assert_eq!(&a + &HalfLaurent::one(), HalfLaurent::q_pow(1));
        assert_eq!(&a + &HalfLaurent::zero(), a);
        assert!((&a + &(-&a)).is_zero());
        assert_eq!(&q_minus_one() * &q_minus_one(), QPoly::from_coeffs([1, -2, 1]));
        assert_eq!(&HalfLaurent::q_half_pow(1) * &HalfLaurent::q_half_pow(-1), HalfLaurent::one());
        assert_eq!(&q_minus_one() * &QPoly::q(), QPoly::from_coeffs([0, -1, 1]));
    }

    #[test]
    fn bar_examples() {
        assert_eq!(HalfLaurent::q_pow(1).bar(), HalfLaurent::q_pow(-1));
        let a = &HalfLaurent::q_half_pow(1) + &HalfLaurent::one();
        assert_eq!(a.bar(), &HalfLaurent::q_half_pow(-1) + &HalfLaurent::one());
    }

    #[test]
    fn tilde_examples() {
        assert_eq!(q_minus_one().tilde(1).unwrap(), QPoly::from_coeffs([1, -1]));
        assert_eq!(QPoly::one().tilde(0).unwrap(), QPoly::one());
        assert_eq!(QPoly::from_coeffs([0, -1, 1]).tilde(2).unwrap(), QPoly::from_coeffs([1, -1]));
        assert_eq!(
            QPoly::from_coeffs([0, 0, 1]).tilde(1),
            Err(PolyError::DegreeExceedsBound { degree: 2, bound: 1 })
        );
        assert_eq!(QPoly::zero().tilde(0).unwrap(), QPoly::zero());
    }

    #[test]
    fn accessors() {
        assert_eq!(QPoly::from_coeffs([0, -1, 1]).degree(), Some(2));
        assert_eq!(QPoly::zero().degree(), None);
        assert_eq!(QPoly::from_coeffs([1, -1]).eval_at_zero(), BigInt::from(1));
        assert_eq!(QPoly::from_coeffs([1, 1]).coeff(1), BigInt::from(1));
        assert_eq!(QPoly::from_coeffs([1, 1]).coeff(-3), BigInt::zero());
        assert_eq!(QPoly::from_coeffs([1, 1]).coeff(7), BigInt::zero());
    }

    #[test]
    fn display() {
        assert_eq!(QPoly::from_coeffs([1, -2, 1]).to_string(), "q^2 - 2q + 1");
        assert_eq!(QPoly::zero().to_string(), "0");
        let h = &HalfLaurent::q_half_pow(-1) + &HalfLaurent::from_terms([(-2, -3)]);
        assert_eq!(h.to_string(), "q^(-1/2) - 3q^(-1)");
    }

    #[test]
    fn json_shapes() {
        let p = QPoly::from_coeffs([1, 0, -2]);
        assert_eq!(serde_json::to_string(&p).unwrap(), "[1,0,-2]");
        let h = HalfLaurent::from_terms([(-1, 2), (4, -1)]);
        assert_eq!(serde_json::to_string(&h).unwrap(), "[[-1,2],[4,-1]]");
        let huge = QPoly::from_big(vec![BigInt::from(i64::MAX) * 4]);
        let text = serde_json::to_string(&huge).unwrap();
        assert_eq!(serde_json::from_str::<QPoly>(&text).unwrap(), huge);
        assert_eq!(serde_json::from_str::<HalfLaurent>("[[-1,2],[4,-1]]").unwrap(), h);
    }

    #[test]
    fn laurent_to_poly() {
        assert_eq!(HalfLaurent::from_terms([(0, 1), (4, 2)]).to_qpoly().unwrap(), QPoly::from_coeffs([1, 0, 2]));
        assert!(HalfLaurent::q_half_pow(1).to_qpoly().is_err());
        assert!(HalfLaurent::q_pow(-1).to_qpoly().is_err());
        assert_eq!(HalfLaurent::zero().to_qpoly().unwrap(), QPoly::zero());
    }

    fn arb_laurent() -> impl Strategy<Value = HalfLaurent> {
        prop::collection::vec((-6i64..6, -5i64..5), 0..6).prop_map(HalfLaurent::from_terms)
    }

    fn arb_qpoly() -> impl Strategy<Value = QPoly> {
        prop::collection::vec(-5i64..5, 0..6).prop_map(QPoly::from_coeffs)
    }

    proptest! {
        #[test]
        fn bar_is_a_ring_involution(a in arb_laurent(), b in arb_laurent()) {
            prop_assert_eq!(a.bar().bar(), a.clone());
            prop_assert_eq!((&a * &b).bar(), &a.bar() * &b.bar());
            prop_assert_eq!((&a + &b).bar(), &a.bar() + &b.bar());
        }

        #[test]
        fn laurent_ring_axioms(a in arb_laurent(), b in arb_laurent(), c in arb_laurent()) {
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a * &HalfLaurent::one(), a.clone());
        }

        #[test]
        fn tilde_is_an_involution(a in arb_qpoly(), extra in 0usize..4) {
            let n = a.degree().unwrap_or(0) + extra;
            prop_assert_eq!(a.tilde(n).unwrap().tilde(n).unwrap(), a);
        }

        #[test]
        fn embedding_is_a_ring_map(a in arb_qpoly(), b in arb_qpoly()) {
            prop_assert_eq!(HalfLaurent::from(&a * &b), &a.to_half_laurent() * &b.to_half_laurent());
            prop_assert_eq!(HalfLaurent::from(&a + &b), &a.to_half_laurent() + &b.to_half_laurent());
            prop_assert_eq!(a.to_half_laurent().to_qpoly().unwrap(), a);
        }
    }
}
