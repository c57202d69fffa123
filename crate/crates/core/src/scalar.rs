//! Exact scalars of the form `sum q * 2^e`, where `q` is rational and the
//! exponent `e` is a rational plus a rational combination of `1/sqrt(s)` for
//! square-free `s > 1`.
//!
//! Canonical form: the rational part of every exponent is reduced into
//! `[0, 1)` with the integer part folded into the coefficient, exponents are
//! pairwise distinct, coefficients are nonzero. Equality is identity of
//! canonical forms.
//!
//! Text form, one term: `q * 2^(r + c1/sqrt(s1) + c2/sqrt(s2))`; terms are
//! joined by `" + "` and zero is `"0"`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// The exponent of a power of two: `rat + sum_s irr[s] / sqrt(s)`.
///
/// Radicands are square-free and `> 1`; no coefficient in `irr` is zero.
/// The derived ordering is lexicographic on `(rat, irr entries)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct DyadicExponent {
    rat: BigRational,
    irr: BTreeMap<u64, BigRational>,
}

impl DyadicExponent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn rational(rat: BigRational) -> Self {
        DyadicExponent {
            rat,
            irr: BTreeMap::new(),
        }
    }

    /// `coeff / sqrt(radicand)`, with the square part of the radicand moved
    /// into the coefficient.
    pub fn over_sqrt(coeff: BigRational, radicand: u64) -> Result<Self> {
        if radicand == 0 {
            return Err(Error::ZeroRadicand);
        }
        let (root, free) = split_square(radicand);
        let c = coeff / BigRational::from_integer(BigInt::from(root));
        if free == 1 {
            return Ok(Self::rational(c));
        }
        let mut irr = BTreeMap::new();
        if !c.is_zero() {
            irr.insert(free, c);
        }
        Ok(DyadicExponent {
            rat: BigRational::zero(),
            irr,
        })
    }

    pub fn rat(&self) -> &BigRational {
        &self.rat
    }

    pub fn irr(&self) -> &BTreeMap<u64, BigRational> {
        &self.irr
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.irr.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.irr.is_empty()
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.rat += &other.rat;
        for (s, c) in &other.irr {
            let entry = out.irr.entry(*s).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                out.irr.remove(s);
            }
        }
        out
    }

    pub fn negated(&self) -> Self {
        DyadicExponent {
            rat: -self.rat.clone(),
            irr: self.irr.iter().map(|(s, c)| (*s, -c.clone())).collect(),
        }
    }

    /// Splits off `floor(rat)`, leaving the rational part in `[0, 1)`.
    fn split_integer(mut self) -> (BigInt, Self) {
        let k = self.rat.floor().to_integer();
        self.rat -= BigRational::from_integer(k.clone());
        (k, self)
    }
}

impl fmt::Display for DyadicExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rat)?;
        for (s, c) in &self.irr {
            write!(f, " + {c}/sqrt({s})")?;
        }
        Ok(())
    }
}

/// Returns `(k, s)` with `n = k^2 s` and `s` square-free.
fn split_square(mut n: u64) -> (u64, u64) {
    let mut root = 1u64;
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        while n.is_multiple_of(p * p) {
            n /= p * p;
            root *= p;
        }
        p += 1;
    }
    (root, n)
}

fn pow2(k: &BigInt) -> BigRational {
    let e = k.abs().to_usize().expect("exponent fits in usize");
    let p = BigInt::one() << e;
    if k.is_negative() {
        BigRational::new(BigInt::one(), p)
    } else {
        BigRational::from_integer(p)
    }
}

/// An exact element of the coefficient ring, kept in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ExactScalar {
    terms: BTreeMap<DyadicExponent, BigRational>,
}

impl ExactScalar {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_rational(q: BigRational) -> Self {
        Self::monomial(q, DyadicExponent::zero())
    }

    pub fn ratio(numer: i64, denom: i64) -> Self {
        Self::from_rational(BigRational::new(numer.into(), denom.into()))
    }

    /// `q * 2^e`, normalized.
    pub fn monomial(q: BigRational, e: DyadicExponent) -> Self {
        let mut out = Self::zero();
        out.add_term(q, e);
        out
    }

    /// `2^((numer_halves / 2) / sqrt(radicand))`.
    pub fn from_power_of_two(numer_halves: i64, radicand: u64) -> Result<Self> {
        let c = BigRational::new(BigInt::from(numer_halves), BigInt::from(2));
        let e = DyadicExponent::over_sqrt(c, radicand)?;
        Ok(Self::monomial(BigRational::one(), e))
    }

    fn add_term(&mut self, q: BigRational, e: DyadicExponent) {
        if q.is_zero() {
            return;
        }
        let (k, e) = e.split_integer();
        let q = if k.is_zero() { q } else { q * pow2(&k) };
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(q);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += q;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_rational().is_some_and(|q| q.is_one())
    }

    /// The value as a rational, when the scalar has no irrational part.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (e, q) = self.terms.iter().next()?;
                e.is_zero().then(|| q.clone())
            }
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DyadicExponent, &BigRational)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Rebuilds the canonical form from the stored terms.
    pub fn renormalized(&self) -> Self {
        let mut out = Self::zero();
        for (e, q) in &self.terms {
            out.add_term(q.clone(), e.clone());
        }
        out
    }

    /// Multiplicative inverse of a single-term scalar.
    pub fn monomial_inverse(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (e, q) = self.terms.iter().next()?;
        Some(Self::monomial(q.recip(), e.negated()))
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        ExactScalar {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * q)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }
}

impl From<i64> for ExactScalar {
    fn from(n: i64) -> Self {
        Self::from_integer(n)
    }
}

impl From<BigRational> for ExactScalar {
    fn from(q: BigRational) -> Self {
        Self::from_rational(q)
    }
}

impl<'a> Add<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn add(self, rhs: &'a ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&ExactScalar> for ExactScalar {
    fn add_assign(&mut self, rhs: &ExactScalar) {
        for (e, q) in &rhs.terms {
            // rhs is canonical, so its exponents need no re-splitting
            match self.terms.entry(e.clone()) {
                std::collections::btree_map::Entry::Vacant(slot) => {
                    slot.insert(q.clone());
                }
                std::collections::btree_map::Entry::Occupied(mut slot) => {
                    *slot.get_mut() += q;
                    if slot.get().is_zero() {
                        slot.remove();
                    }
                }
            }
        }
    }
}

impl<'a> Sub<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn sub(self, rhs: &'a ExactScalar) -> ExactScalar {
        let mut out = self.clone();
        out += &-rhs;
        out
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar {
            terms: self
                .terms
                .iter()
                .map(|(e, q)| (e.clone(), -q.clone()))
                .collect(),
        }
    }
}

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        -&self
    }
}

impl<'a> Mul<&'a ExactScalar> for &'a ExactScalar {
    type Output = ExactScalar;
    fn mul(self, rhs: &'a ExactScalar) -> ExactScalar {
        let mut out = ExactScalar::zero();
        for (e1, q1) in &self.terms {
            for (e2, q2) in &rhs.terms {
                out.add_term(q1 * q2, e1.plus(e2));
            }
        }
        out
    }
}

macro_rules! owned_binop {
    ($tr:ident, $f:ident) => {
        impl $tr<ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $f(self, rhs: ExactScalar) -> ExactScalar {
                (&self).$f(&rhs)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, q)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{q} * 2^({e})")?;
        }
        Ok(())
    }
}

/// Splits on `" + "` outside parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let bytes = s.as_bytes();
    let mut k = 0usize;
    while k < bytes.len() {
        match bytes[k] {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            b' ' if depth == 0 && s[k..].starts_with(" + ") => {
                parts.push(&s[start..k]);
                start = k + 3;
                k += 3;
                continue;
            }
            _ => {}
        }
        k += 1;
    }
    parts.push(&s[start..]);
    parts
}

fn parse_rational(text: &str, whole: &str) -> Result<BigRational> {
    let bad = |reason: String| Error::ScalarParse {
        text: whole.to_string(),
        reason,
    };
    let q = BigRational::from_str(text).map_err(|e| bad(format!("rational {text:?}: {e}")))?;
    // canonical text only: lowest terms, positive denominator, no "/1"
    if q.to_string() != text {
        return Err(bad(format!("rational {text:?} is not in lowest terms")));
    }
    Ok(q)
}

impl FromStr for ExactScalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::ScalarParse {
            text: s.to_string(),
            reason: reason.to_string(),
        };
        let s_trim = s.trim();
        if s_trim == "0" {
            return Ok(Self::zero());
        }
        let mut out = Self::zero();
        for term in split_top_level(s_trim) {
            let (coeff, rest) = term
                .split_once(" * 2^(")
                .ok_or_else(|| bad("expected 'q * 2^(...)'"))?;
            let body = rest.strip_suffix(')').ok_or_else(|| bad("missing ')'"))?;
            let q = parse_rational(coeff, s)?;
            let mut pieces = split_top_level(body).into_iter();
            let rat = parse_rational(pieces.next().unwrap_or(""), s)?;
            let mut e = DyadicExponent::rational(rat);
            for piece in pieces {
                let (c, tail) = piece
                    .split_once("/sqrt(")
                    .ok_or_else(|| bad("expected 'c/sqrt(s)'"))?;
                let radicand: u64 = tail
                    .strip_suffix(')')
                    .and_then(|r| r.parse().ok())
                    .ok_or_else(|| bad("bad radicand"))?;
                let c = parse_rational(c, s)?;
                e = e.plus(&DyadicExponent::over_sqrt(c, radicand)?);
            }
            out.add_term(q, e);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn p2(c: BigRational, s: u64) -> ExactScalar {
        ExactScalar::monomial(BigRational::one(), DyadicExponent::over_sqrt(c, s).unwrap())
    }

    #[test]
    fn power_of_two_square_extraction() {
        let x = ExactScalar::from_power_of_two(-6, 8).unwrap();
        // -3/sqrt(8) = -(3/2)/sqrt(2)
        let (e, q) = x.terms().next().unwrap();
        assert!(q.is_one());
        assert!(e.rat().is_zero());
        assert_eq!(e.irr().get(&2), Some(&r(-3, 2)));

        // (-2/2)/sqrt(4) = -1/2
        let x = ExactScalar::from_power_of_two(-2, 4).unwrap();
        assert_eq!(x, ExactScalar::from_power_of_two(-1, 1).unwrap());
        let half = ExactScalar::from_power_of_two(-4, 4).unwrap();
        assert_eq!(half, ExactScalar::ratio(1, 2));
        assert_eq!(
            ExactScalar::from_power_of_two(0, 10).unwrap(),
            ExactScalar::one()
        );
        assert_eq!(
            ExactScalar::from_power_of_two(1, 0),
            Err(Error::ZeroRadicand)
        );
    }

    #[test]
    fn add_examples() {
        let a = p2(r(1, 1), 2);
        let sum = &a.scale(&r(3, 1)) + &a.scale(&r(5, 1));
        assert_eq!(sum, a.scale(&r(8, 1)));
        let b = p2(r(1, 1), 3);
        assert_eq!((&a + &b).term_count(), 2);
        assert!((&a - &a).is_zero());
        assert!(!(&a - &b).is_zero());
        assert!(ExactScalar::zero().is_zero());
    }

    #[test]
    fn mul_examples() {
        let a = p2(r(1, 1), 2);
        assert_eq!(&a * &a, p2(r(2, 1), 2));
        let x = ExactScalar::monomial(r(1, 2), DyadicExponent::rational(r(3, 1)));
        assert_eq!(
            &x * &ExactScalar::from_integer(4),
            ExactScalar::from_integer(16)
        );
        let one = ExactScalar::one();
        let lhs = &(&one + &a) * &(&one - &a);
        assert_eq!(lhs, &one - &p2(r(2, 1), 2));
    }

    #[test]
    fn integer_exponents_fold_into_coefficients() {
        let sqrt2 = ExactScalar::monomial(BigRational::one(), DyadicExponent::rational(r(1, 2)));
        assert_eq!(&sqrt2 * &sqrt2, ExactScalar::from_integer(2));
        let x = ExactScalar::monomial(r(1, 2), DyadicExponent::rational(r(3, 2)));
        assert_eq!(x, sqrt2);
    }

    #[test]
    fn monomial_inverse() {
        let x = ExactScalar::from_power_of_two(-6, 8)
            .unwrap()
            .scale(&r(-3, 7));
        assert_eq!(&x * &x.monomial_inverse().unwrap(), ExactScalar::one());
        assert!((&x + &ExactScalar::one()).monomial_inverse().is_none());
    }

    #[test]
    fn text_form() {
        let x = &ExactScalar::from_power_of_two(-6, 8)
            .unwrap()
            .scale(&r(-4, 3))
            + &ExactScalar::monomial(r(5, 1), DyadicExponent::rational(r(1, 2)));
        let x = &x * &p2(r(1, 3), 3);
        let text = x.to_string();
        assert_eq!(text.parse::<ExactScalar>().unwrap(), x);
        assert_eq!(ExactScalar::zero().to_string(), "0");
        assert_eq!(ExactScalar::from_integer(-4).to_string(), "-4 * 2^(0)");
        assert_eq!(
            ExactScalar::from_power_of_two(-6, 8).unwrap().to_string(),
            "1 * 2^(0 + -3/2/sqrt(2))"
        );
        assert!("2/4 * 2^(0)".parse::<ExactScalar>().is_err());
        assert!("1 * 2^(0".parse::<ExactScalar>().is_err());
    }
}
