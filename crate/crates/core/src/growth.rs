//! The growth sequence `d = (a_1, b_1, a_2, b_2, ...)` and the classification
//! of indices into the five construction cases.
//!
//! Block `n` covers the indices `(v_{n-1}, v_n]` where `v_n = n (a_n + b_n)`.
//! Inside a block the cases appear in this order:
//!
//! ```text
//! B r=0      (v_{n-1}, a_n)
//! A r        [r a_n, r a_n + v_{n-r}]                 1 <= r <= n
//! B r        (r a_n + v_{n-r}, (r+1) a_n)             1 <= r <  n
//! D r        (n a_n + r b_n, (r+1)(a_n + b_n))        0 <= r <  n
//! C r        [r (a_n + b_n), n a_n + r b_n]           1 <= r <= n
//! ```
//!
//! The ranges partition `[1, v_M]` as long as `a_n > v_{n-1}` and
//! `b_n > (n-1) a_n`, on top of strict monotonicity of the interleaved terms.

use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};

/// A finite prefix of the growth sequence, `M` blocks long.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrowthSequence {
    a: Vec<u64>,
    b: Vec<u64>,
    v: Vec<u64>,
}

/// One violated structural condition, indexed by block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NonPositive {
        n: usize,
    },
    /// `a_n >= b_n` (`upper = false`) or `b_n >= a_{n+1}` (`upper = true`).
    NotIncreasing {
        n: usize,
        upper: bool,
    },
    /// `a_n <= v_{n-1}`: block `n` would overlap block `n-1`.
    BlockOverlap {
        n: usize,
        a_n: u64,
        v_prev: u64,
    },
    /// `b_n <= (n-1) a_n`: the first D range of block `n` is empty.
    DRangeEmpty {
        n: usize,
        b_n: u64,
        bound: u64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::NonPositive { n } => write!(f, "block {n}: terms must be positive"),
            Violation::NotIncreasing { n, upper: false } => {
                write!(
                    f,
                    "block {n}: a_{n} >= b_{n}, sequence not strictly increasing"
                )
            }
            Violation::NotIncreasing { n, upper: true } => {
                write!(
                    f,
                    "block {n}: b_{n} >= a_{}, sequence not strictly increasing",
                    n + 1
                )
            }
            Violation::BlockOverlap { n, a_n, v_prev } => write!(
                f,
                "block {n}: a_{n}={a_n} <= v_{}={v_prev}, blocks overlap at i={a_n}",
                n - 1
            ),
            Violation::DRangeEmpty { n, b_n, bound } => write!(
                f,
                "block {n}: b_{n}={b_n} <= (n-1)a_{n}={bound}, case D range is empty"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub even_ok: bool,
    pub modulus: u64,
    pub divisible_ok: bool,
    pub require_even: bool,
}

impl ValidationReport {
    /// The case ranges partition `[0, v_M]`.
    pub fn structurally_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Structural validity plus whatever evenness/divisibility was requested.
    pub fn passes(&self) -> bool {
        self.structurally_valid()
            && (!self.require_even || self.even_ok)
            && (self.modulus <= 1 || self.divisible_ok)
    }

    pub fn messages(&self) -> Vec<String> {
        let mut out: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        if self.require_even && !self.even_ok {
            out.push("evenness required but some term is odd".to_string());
        }
        if self.modulus > 1 && !self.divisible_ok {
            out.push(format!(
                "modulus {} does not divide every term",
                self.modulus
            ));
        }
        out
    }
}

/// Which construction case an index falls into.
///
/// `h` is the midpoint used by the exponential cases; `B { r: 0, .. }`
/// encodes the range `(v_{n-1}, a_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IndexCase {
    Zero,
    A { n: usize, r: usize },
    B { n: usize, r: usize, h: Ratio<u64> },
    C { n: usize, r: usize },
    D { n: usize, r: usize, h: Ratio<u64> },
}

impl IndexCase {
    pub fn block(&self) -> usize {
        match *self {
            IndexCase::Zero => 0,
            IndexCase::A { n, .. }
            | IndexCase::B { n, .. }
            | IndexCase::C { n, .. }
            | IndexCase::D { n, .. } => n,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            IndexCase::Zero => "0",
            IndexCase::A { .. } => "A",
            IndexCase::B { .. } => "B",
            IndexCase::C { .. } => "C",
            IndexCase::D { .. } => "D",
        }
    }
}

impl fmt::Display for IndexCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexCase::Zero => write!(f, "Zero"),
            IndexCase::A { n, r } => write!(f, "A{{n={n}, r={r}}}"),
            IndexCase::B { n, r, h } => write!(f, "B{{n={n}, r={r}, h={h}}}"),
            IndexCase::C { n, r } => write!(f, "C{{n={n}, r={r}}}"),
            IndexCase::D { n, r, h } => write!(f, "D{{n={n}, r={r}, h={h}}}"),
        }
    }
}

impl GrowthSequence {
    pub fn new(a: Vec<u64>, b: Vec<u64>) -> Result<Self> {
        if a.is_empty() && b.is_empty() {
            return Err(Error::EmptySequence);
        }
        if a.len() != b.len() {
            return Err(Error::UnbalancedSequence {
                a: a.len(),
                b: b.len(),
            });
        }
        let mut v = Vec::with_capacity(a.len() + 1);
        v.push(0);
        for (k, (&an, &bn)) in a.iter().zip(&b).enumerate() {
            let vn = an
                .checked_add(bn)
                .and_then(|s| s.checked_mul(k as u64 + 1))
                .ok_or(Error::Overflow("v_n = n (a_n + b_n)"))?;
            v.push(vn);
        }
        Ok(GrowthSequence { a, b, v })
    }

    /// Builds from the interleaved form `a_1, b_1, a_2, b_2, ...`.
    pub fn from_interleaved(d: &[u64]) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::EmptySequence);
        }
        if !d.len().is_multiple_of(2) {
            return Err(Error::OddLength(d.len()));
        }
        let a = d.iter().step_by(2).copied().collect();
        let b = d.iter().skip(1).step_by(2).copied().collect();
        Self::new(a, b)
    }

    /// Geometric rule: `a_1 = first_a` and every following interleaved term
    /// is the previous one times `ratio`.
    pub fn geometric(first_a: u64, ratio: u64, blocks: usize) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::EmptySequence);
        }
        let mut d = Vec::with_capacity(2 * blocks);
        let mut term = first_a;
        for k in 0..2 * blocks {
            if k > 0 {
                term = term
                    .checked_mul(ratio)
                    .ok_or(Error::Overflow("geometric rule term"))?;
            }
            d.push(term);
        }
        Self::from_interleaved(&d)
    }

    pub fn blocks(&self) -> usize {
        self.a.len()
    }

    pub fn interleaved(&self) -> Vec<u64> {
        self.a
            .iter()
            .zip(&self.b)
            .flat_map(|(&a, &b)| [a, b])
            .collect()
    }

    /// `a_n`, with the convention `a_0 = 1`.
    pub fn a(&self, n: usize) -> u64 {
        if n == 0 {
            1
        } else {
            self.a[n - 1]
        }
    }

    pub fn b(&self, n: usize) -> u64 {
        self.b[n - 1]
    }

    pub fn v_of(&self, n: usize) -> Result<u64> {
        self.v.get(n).copied().ok_or(Error::BlockOutOfRange {
            n,
            max: self.blocks(),
        })
    }

    #[cfg(test)]
    pub(crate) fn v(&self, n: usize) -> u64 {
        self.v[n]
    }

    /// Largest index covered by the sequence, `v_M`.
    pub fn max_index(&self) -> usize {
        self.v[self.blocks()] as usize
    }

    pub fn even_ok(&self) -> bool {
        self.div_m(2)
    }

    pub fn div_m(&self, m: u64) -> bool {
        self.first_not_divisible(m).is_none()
    }

    pub(crate) fn first_not_divisible(&self, m: u64) -> Option<u64> {
        if m == 0 {
            return self.a.first().copied();
        }
        self.interleaved().into_iter().find(|t| t % m != 0)
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for n in 1..=self.blocks() {
            let (an, bn) = (self.a(n), self.b(n));
            if an == 0 || bn == 0 {
                out.push(Violation::NonPositive { n });
            }
            if an >= bn {
                out.push(Violation::NotIncreasing { n, upper: false });
            }
            if n < self.blocks() && bn >= self.a(n + 1) {
                out.push(Violation::NotIncreasing { n, upper: true });
            }
            let v_prev = self.v[n - 1];
            if an <= v_prev {
                out.push(Violation::BlockOverlap { n, a_n: an, v_prev });
            }
            let bound = (n as u64 - 1).saturating_mul(an);
            if bn <= bound {
                out.push(Violation::DRangeEmpty { n, b_n: bn, bound });
            }
        }
        out
    }

    pub fn is_structurally_valid(&self) -> bool {
        self.violations().is_empty()
    }

    pub fn validate(&self, require_even: bool, m: u64) -> Result<ValidationReport> {
        if m == 0 {
            return Err(Error::ZeroModulus);
        }
        Ok(ValidationReport {
            violations: self.violations(),
            even_ok: self.even_ok(),
            modulus: m,
            divisible_ok: self.div_m(m),
            require_even,
        })
    }

    /// Classifies `i` into its construction case.
    ///
    /// Refuses structurally invalid sequences and indices beyond `v_M`.
    pub fn classify(&self, i: usize) -> Result<IndexCase> {
        let violations = self.violations();
        if let Some(v) = violations.first() {
            return Err(Error::InvalidSequence(v.to_string()));
        }
        self.classify_unchecked(i)
    }

    /// Classification for a sequence already known to be valid.
    pub(crate) fn classify_unchecked(&self, i: usize) -> Result<IndexCase> {
        if i > self.max_index() {
            return Err(Error::WindowExceedsSequence {
                index: i,
                max: self.max_index(),
            });
        }
        if i == 0 {
            return Ok(IndexCase::Zero);
        }
        let i = i as u64;
        let n = (1..=self.blocks())
            .find(|&n| i <= self.v[n])
            .expect("i <= v_M");
        let (an, bn) = (self.a(n), self.b(n));
        let nn = n as u64;
        if i < an {
            return Ok(IndexCase::B {
                n,
                r: 0,
                h: Ratio::new(an, 2),
            });
        }
        if i <= nn * an {
            let r = (i / an) as usize;
            if i - r as u64 * an <= self.v[n - r] {
                return Ok(IndexCase::A { n, r });
            }
            return Ok(IndexCase::B {
                n,
                r,
                h: Ratio::new((2 * r as u64 + 1) * an, 2),
            });
        }
        let r = (i / (an + bn)) as usize;
        if r >= 1 && i <= nn * an + r as u64 * bn {
            return Ok(IndexCase::C { n, r });
        }
        Ok(IndexCase::D {
            n,
            r,
            h: Ratio::new((2 * r as u64 + 1) * bn, 2),
        })
    }
}

impl fmt::Display for GrowthSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.interleaved().iter().map(u64::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> GrowthSequence {
        GrowthSequence::from_interleaved(&[2, 4, 8, 10]).unwrap()
    }

    /// Counts how many of the case ranges contain `i`, enumerating every
    /// family and every admissible `(n, r)`.
    fn brute_force_hits(seq: &GrowthSequence, i: u64) -> Vec<String> {
        let mut hits = Vec::new();
        if i == 0 {
            hits.push("0".to_string());
        }
        for n in 1..=seq.blocks() {
            let (an, bn, nn) = (seq.a(n), seq.b(n), n as u64);
            for r in 1..=n {
                let lo = r as u64 * an;
                if lo <= i && i <= lo + seq.v(n - r) {
                    hits.push(format!("A{n},{r}"));
                }
            }
            for r in 1..n {
                let lo = r as u64 * an + seq.v(n - r);
                if lo < i && i < (r as u64 + 1) * an {
                    hits.push(format!("B{n},{r}"));
                }
            }
            if seq.v(n - 1) < i && i < an {
                hits.push(format!("B{n},0"));
            }
            for r in 1..=n {
                let ru = r as u64;
                if ru * (an + bn) <= i && i <= nn * an + ru * bn {
                    hits.push(format!("C{n},{r}"));
                }
            }
            for r in 0..n {
                let ru = r as u64;
                if nn * an + ru * bn < i && i < (ru + 1) * (an + bn) {
                    hits.push(format!("D{n},{r}"));
                }
            }
        }
        hits
    }

    fn tag(case: &IndexCase) -> String {
        match case {
            IndexCase::Zero => "0".into(),
            IndexCase::A { n, r } => format!("A{n},{r}"),
            IndexCase::B { n, r, .. } => format!("B{n},{r}"),
            IndexCase::C { n, r } => format!("C{n},{r}"),
            IndexCase::D { n, r, .. } => format!("D{n},{r}"),
        }
    }

    #[test]
    fn v_values() {
        let s = toy();
        assert_eq!(s.v_of(0).unwrap(), 0);
        assert_eq!(s.v_of(1).unwrap(), 6);
        assert_eq!(s.v_of(2).unwrap(), 36);
        assert!(matches!(s.v_of(3), Err(Error::BlockOutOfRange { .. })));
    }

    #[test]
    fn validate_examples() {
        let r = toy().validate(true, 2).unwrap();
        assert!(r.passes() && r.even_ok && r.divisible_ok);

        let bad = GrowthSequence::from_interleaved(&[2, 4, 6, 10]).unwrap();
        let r = bad.validate(false, 1).unwrap();
        assert_eq!(
            r.violations,
            vec![Violation::BlockOverlap {
                n: 2,
                a_n: 6,
                v_prev: 6
            }]
        );
        // brute force: i=6 lies in block 1 (C) and in block 2 (A r=1)
        assert!(brute_force_hits(&bad, 6).len() > 1);

        let r = GrowthSequence::from_interleaved(&[2, 4])
            .unwrap()
            .validate(false, 4)
            .unwrap();
        assert!(r.structurally_valid());
        assert!(!r.divisible_ok && !r.passes());
    }

    #[test]
    fn empty_and_bad_shapes() {
        assert_eq!(
            GrowthSequence::from_interleaved(&[]),
            Err(Error::EmptySequence)
        );
        assert_eq!(
            GrowthSequence::from_interleaved(&[2, 4, 8]),
            Err(Error::OddLength(3))
        );
        assert!(toy().validate(false, 0).is_err());
    }

    #[test]
    fn classify_examples() {
        let s = toy();
        assert_eq!(s.classify(0).unwrap(), IndexCase::Zero);
        assert_eq!(
            s.classify(4).unwrap(),
            IndexCase::D {
                n: 1,
                r: 0,
                h: Ratio::from_integer(2)
            }
        );
        assert_eq!(s.classify(14).unwrap(), IndexCase::A { n: 2, r: 1 });
        assert_eq!(
            s.classify(15).unwrap(),
            IndexCase::B {
                n: 2,
                r: 1,
                h: Ratio::from_integer(12)
            }
        );
        assert!(matches!(
            s.classify(37),
            Err(Error::WindowExceedsSequence { index: 37, max: 36 })
        ));
        let bad = GrowthSequence::from_interleaved(&[2, 4, 6, 10]).unwrap();
        assert!(matches!(bad.classify(3), Err(Error::InvalidSequence(_))));
    }

    #[test]
    fn classify_matches_brute_force_on_toy() {
        let s = toy();
        for i in 0..=s.max_index() {
            let hits = brute_force_hits(&s, i as u64);
            assert_eq!(hits.len(), 1, "i={i} hits={hits:?}");
            assert_eq!(hits[0], tag(&s.classify(i).unwrap()));
        }
    }

    #[test]
    fn odd_terms_give_half_integer_midpoints() {
        let s = GrowthSequence::from_interleaved(&[3, 5]).unwrap();
        assert!(s.is_structurally_valid());
        assert_eq!(
            s.classify(1).unwrap(),
            IndexCase::B {
                n: 1,
                r: 0,
                h: Ratio::new(3, 2)
            }
        );
    }

    #[test]
    fn geometric_rule() {
        let s = GrowthSequence::geometric(4, 4, 2).unwrap();
        assert_eq!(s.interleaved(), vec![4, 16, 64, 256]);
        assert!(s.validate(true, 4).unwrap().passes());
    }
}
