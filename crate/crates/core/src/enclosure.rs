//! Rigorous interval enclosures of exact scalars.
//!
//! Endpoints are dyadic rationals; every operation rounds outward, so the
//! true value always lies inside `[lo, hi]`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::scalar::{DyadicExponent, ExactScalar};

/// Extra bits carried through intermediate steps.
const GUARD_BITS: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enclosure {
    lo: BigRational,
    hi: BigRational,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn magnitude_bits(x: &BigRational) -> i64 {
    x.numer().bits() as i64 - x.denom().bits() as i64
}

fn scale_pow2(x: &BigRational, k: i64) -> BigRational {
    let p = BigInt::one() << k.unsigned_abs();
    if k >= 0 {
        x * BigRational::from_integer(p)
    } else {
        x / BigRational::from_integer(p)
    }
}

/// Rounds toward -inf keeping about `bits` significant bits.
fn round_down(x: &BigRational, bits: u32) -> BigRational {
    if x.is_zero() || x.denom().is_one() && x.numer().bits() <= bits as u64 {
        return x.clone();
    }
    let shift = bits as i64 - magnitude_bits(x) + 1;
    scale_pow2(&scale_pow2(x, shift).floor(), -shift)
}

fn round_up(x: &BigRational, bits: u32) -> BigRational {
    -round_down(&-x, bits)
}

impl Enclosure {
    pub fn point(x: BigRational) -> Self {
        Enclosure {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "enclosure endpoints out of order");
        Enclosure { lo, hi }
    }

    pub fn zero() -> Self {
        Self::point(BigRational::zero())
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&BigRational::zero())
    }

    pub fn excludes_zero(&self) -> bool {
        !self.contains_zero()
    }

    /// Lies entirely at or below `x`.
    pub fn le(&self, x: &BigRational) -> bool {
        &self.hi <= x
    }

    /// Lies strictly above `x`.
    pub fn gt(&self, x: &BigRational) -> bool {
        &self.lo > x
    }

    pub fn intersects(&self, other: &Enclosure) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn mul(&self, other: &Enclosure) -> Enclosure {
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = products.iter().min().cloned().expect("four products");
        let hi = products.iter().max().cloned().expect("four products");
        Enclosure { lo, hi }
    }

    pub fn scale(&self, q: &BigRational) -> Enclosure {
        let (a, b) = (&self.lo * q, &self.hi * q);
        if q.is_negative() {
            Enclosure { lo: b, hi: a }
        } else {
            Enclosure { lo: a, hi: b }
        }
    }

    pub fn abs(&self) -> Enclosure {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            Enclosure {
                lo: -self.hi.clone(),
                hi: -self.lo.clone(),
            }
        } else {
            Enclosure {
                lo: BigRational::zero(),
                hi: std::cmp::max(-self.lo.clone(), self.hi.clone()),
            }
        }
    }

    /// Outward rounding to `bits` significant bits.
    pub fn rounded(&self, bits: u32) -> Enclosure {
        Enclosure {
            lo: round_down(&self.lo, bits),
            hi: round_up(&self.hi, bits),
        }
    }

    pub fn midpoint_f64(&self) -> f64 {
        ((&self.lo + &self.hi) / rat(2))
            .to_f64()
            .unwrap_or(f64::NAN)
    }

    /// `log2` of the width, or `None` for a point.
    pub fn width_log2(&self) -> Option<i64> {
        let w = self.width();
        (!w.is_zero()).then(|| magnitude_bits(&w))
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lo = self.lo.to_f64().unwrap_or(f64::NAN);
        let hi = self.hi.to_f64().unwrap_or(f64::NAN);
        if self.lo == self.hi {
            write!(f, "[{lo:e}]")
        } else {
            write!(f, "[{lo:e}, {hi:e}]")
        }
    }
}

/// Evaluates scalars at a fixed precision, caching the enclosures of
/// `2^e` for every exponent seen.
#[derive(Debug, Clone)]
pub struct Evaluator {
    bits: u32,
    ln2: Enclosure,
    inv_sqrt: HashMap<u64, Enclosure>,
    powers: HashMap<DyadicExponent, Enclosure>,
}

impl Evaluator {
    pub fn new(bits: u32) -> Self {
        let work = bits.max(16) + GUARD_BITS;
        Evaluator {
            bits: bits.max(16),
            ln2: ln2_enclosure(work),
            inv_sqrt: HashMap::new(),
            powers: HashMap::new(),
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    fn work_bits(&self) -> u32 {
        self.bits + GUARD_BITS
    }

    fn inv_sqrt(&mut self, s: u64) -> Enclosure {
        let w = self.work_bits();
        self.inv_sqrt
            .entry(s)
            .or_insert_with(|| {
                // floor(sqrt(s 4^w)) / 2^w <= sqrt(s) < (that + 1) / 2^w
                let scaled = BigInt::from(s) << (2 * w as usize);
                let root = scaled.sqrt();
                let den = BigInt::one() << w as usize;
                let lo_sqrt = BigRational::new(root.clone(), den.clone());
                let hi_sqrt = BigRational::new(root + 1, den);
                Enclosure {
                    lo: round_down(&hi_sqrt.recip(), w),
                    hi: round_up(&lo_sqrt.recip(), w),
                }
            })
            .clone()
    }

    fn exponent(&mut self, e: &DyadicExponent) -> Enclosure {
        let mut acc = Enclosure::point(e.rat().clone());
        for (s, c) in e.irr() {
            acc = acc.add(&self.inv_sqrt(*s).scale(c));
        }
        acc.rounded(self.work_bits())
    }

    /// Enclosure of `2^e`.
    pub fn power_of_two(&mut self, e: &DyadicExponent) -> Enclosure {
        if e.is_zero() {
            return Enclosure::point(BigRational::one());
        }
        if let Some(hit) = self.powers.get(e) {
            return hit.clone();
        }
        let w = self.work_bits();
        let x = self.exponent(e);
        let lo = pow2_bound(&x.lo, &self.ln2, w, false);
        let hi = pow2_bound(&x.hi, &self.ln2, w, true);
        let out = Enclosure { lo, hi };
        self.powers.insert(e.clone(), out.clone());
        out
    }

    pub fn evaluate(&mut self, x: &ExactScalar) -> Enclosure {
        let mut acc = Enclosure::zero();
        for (e, q) in x.terms() {
            acc = acc.add(&self.power_of_two(e).scale(q));
        }
        acc.rounded(self.bits)
    }
}

/// Enclosure of `x` at the given precision; `bits` is clamped to at least 16.
pub fn evaluate(x: &ExactScalar, bits: u32) -> Enclosure {
    Evaluator::new(bits).evaluate(x)
}

fn ln2_enclosure(w: u32) -> Enclosure {
    static CACHE: OnceLock<Mutex<HashMap<u32, Enclosure>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().expect("ln2 cache").get(&w) {
        return hit.clone();
    }
    let out = ln2_series(w);
    cache.lock().expect("ln2 cache").insert(w, out.clone());
    out
}

/// `ln 2 = sum_{k>=1} 1 / (k 2^k)`, tail after `n` terms below `1 / ((n+1) 2^n)`.
fn ln2_series(w: u32) -> Enclosure {
    let n = w as i64 + 8;
    let mut lo = BigRational::zero();
    let mut hi = BigRational::zero();
    for k in 1..=n {
        let term = scale_pow2(&BigRational::new(BigInt::one(), BigInt::from(k)), -k);
        lo += round_down(&term, w + 8);
        hi += round_up(&term, w + 8);
    }
    let tail = scale_pow2(&BigRational::new(BigInt::one(), BigInt::from(n + 1)), -n);
    hi += round_up(&tail, w + 8);
    Enclosure {
        lo: round_down(&lo, w),
        hi: round_up(&hi, w),
    }
}

/// A lower (`upper = false`) or upper bound of `2^y`.
fn pow2_bound(y: &BigRational, ln2: &Enclosure, w: u32, upper: bool) -> BigRational {
    let k = y.floor();
    let frac = y - &k;
    let k = k.to_integer().to_i64().expect("exponent of moderate size");
    let z = if upper {
        &frac * &ln2.hi
    } else {
        &frac * &ln2.lo
    };
    let z = if upper {
        round_up(&z, w)
    } else {
        round_down(&z, w)
    };
    let e = exp_bound(&z, w, upper);
    scale_pow2(&e, k)
}

/// Bound on `exp(z)` for `0 <= z < 1` from the Taylor series; the tail after
/// the last term `t_n` is at most `2 t_{n+1}`.
fn exp_bound(z: &BigRational, w: u32, upper: bool) -> BigRational {
    let round = |x: &BigRational| {
        if upper {
            round_up(x, w)
        } else {
            round_down(x, w)
        }
    };
    let threshold = scale_pow2(&BigRational::one(), -(w as i64) - 4);
    let mut sum = BigRational::one();
    let mut term = BigRational::one();
    let mut k = 1i64;
    loop {
        term = round(&(&term * z / rat(k)));
        if term.is_zero() {
            break;
        }
        sum += &term;
        if term < threshold {
            break;
        }
        k += 1;
    }
    if upper {
        let next = round_up(&(&term * z / rat(k + 1)), w);
        sum += next * rat(2);
    }
    round(&sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn exact_rationals_have_zero_width() {
        let e = evaluate(&ExactScalar::ratio(1, 2), 64);
        assert_eq!(e, Enclosure::point(r(1, 2)));
        let x = ExactScalar::from_power_of_two(-3, 2).unwrap();
        assert_eq!(evaluate(&(&x - &x), 64), Enclosure::zero());
    }

    #[test]
    fn inverse_sqrt_two_power() {
        // 2^(-1/2) = 0.70710678118654752440084436210484903928...
        let x = ExactScalar::from_power_of_two(-1, 1).unwrap();
        let enc = evaluate(&x, 64);
        assert!((enc.midpoint_f64() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(enc.width_log2().unwrap() < -60);
        // the square of the enclosure contains 1/2
        assert!(enc.mul(&enc).contains(&r(1, 2)));
    }

    #[test]
    fn ln2_is_tight() {
        let l = ln2_enclosure(200);
        assert!(l.width_log2().unwrap() < -190);
        assert!((l.midpoint_f64() - std::f64::consts::LN_2).abs() < 1e-16);
    }

    #[test]
    fn irrational_exponent() {
        // 2^(1/sqrt(2)) = 1.632526919438152...
        let x = ExactScalar::from_power_of_two(2, 2).unwrap();
        let enc = evaluate(&x, 128);
        assert!((enc.midpoint_f64() - 2f64.powf(std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-14);
        assert!(enc.width_log2().unwrap() < -120);
    }

    #[test]
    fn width_shrinks_with_precision() {
        let x = ExactScalar::from_power_of_two(-7, 12).unwrap();
        let w64 = evaluate(&x, 64).width();
        let w256 = evaluate(&x, 256).width();
        assert!(w256 < w64);
        assert!(evaluate(&x, 64).intersects(&evaluate(&x, 256)));
    }
}
