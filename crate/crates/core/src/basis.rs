//! The two basis expansions of the construction and the window matrices
//! `Q` (column `j` is `e_j` in `f` coordinates) and `Q^{-1}` (column `j` is
//! `f_j` in `e` coordinates).
//!
//! `f_i` in terms of `e` is read directly off the case of `i`. The reverse
//! expansion follows the case chain `i -> i - r a_n` (case A) or
//! `i -> i - b_n` (case C) and is memoized per index.

use std::collections::btree_map::{self, BTreeMap};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::growth::{GrowthSequence, IndexCase};
use crate::scalar::ExactScalar;
use crate::window::{BasisTag, Window};

/// Finitely supported coordinate vector; every stored scalar is nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseVector {
    entries: BTreeMap<usize, ExactScalar>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unit(i: usize) -> Self {
        Self::single(i, ExactScalar::one())
    }

    pub fn single(i: usize, x: ExactScalar) -> Self {
        let mut v = Self::new();
        v.set(i, x);
        v
    }

    pub fn get(&self, i: usize) -> Option<&ExactScalar> {
        self.entries.get(&i)
    }

    pub fn set(&mut self, i: usize, x: ExactScalar) {
        if x.is_zero() {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, x);
        }
    }

    pub fn add_at(&mut self, i: usize, x: &ExactScalar) {
        if x.is_zero() {
            return;
        }
        match self.entries.entry(i) {
            btree_map::Entry::Vacant(slot) => {
                slot.insert(x.clone());
            }
            btree_map::Entry::Occupied(mut slot) => {
                *slot.get_mut() += x;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &SparseVector, c: &ExactScalar) {
        if c.is_zero() {
            return;
        }
        for (&i, x) in &other.entries {
            self.add_at(i, &(x * c));
        }
    }

    pub fn scaled(&self, c: &ExactScalar) -> SparseVector {
        let mut out = SparseVector::new();
        out.add_scaled(self, c);
        out
    }

    pub fn sub(&self, other: &SparseVector) -> SparseVector {
        let mut out = self.clone();
        out.add_scaled(other, &ExactScalar::from_integer(-1));
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest index in the support.
    pub fn degree(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (usize, &ExactScalar)> {
        self.entries.iter().map(|(&i, x)| (i, x))
    }

    /// Drops every index `>= n`.
    pub fn truncated(&self, n: usize) -> SparseVector {
        SparseVector {
            entries: self
                .entries
                .range(..n)
                .map(|(&i, x)| (i, x.clone()))
                .collect(),
        }
    }
}

impl FromIterator<(usize, ExactScalar)> for SparseVector {
    fn from_iter<I: IntoIterator<Item = (usize, ExactScalar)>>(iter: I) -> Self {
        let mut v = SparseVector::new();
        for (i, x) in iter {
            v.add_at(i, &x);
        }
        v
    }
}

/// Per-row / per-column nonzero counts of `Q` and `Q^{-1}` on a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportProfile {
    pub size: usize,
    pub q_rows: Vec<usize>,
    pub q_cols: Vec<usize>,
    pub qinv_rows: Vec<usize>,
    pub qinv_cols: Vec<usize>,
    /// Longest recursion chain met while expanding `e_j`, `j < size`.
    pub max_chain: usize,
}

/// A validated growth sequence together with its memoized expansions.
#[derive(Debug)]
pub struct ReadBasis {
    seq: GrowthSequence,
    cases: Vec<IndexCase>,
    e_memo: Vec<OnceLock<SparseVector>>,
}

fn int(n: u64) -> ExactScalar {
    ExactScalar::from_rational(BigRational::from_integer(BigInt::from(n)))
}

/// `2^((h - i) / sqrt(s))`, with `twice_h = 2h`.
fn decay(twice_h: u64, i: usize, s: u64, sign: i64) -> ExactScalar {
    let numer_halves = sign * (twice_h as i64 - 2 * i as i64);
    ExactScalar::from_power_of_two(numer_halves, s).expect("radicand is a positive term")
}

fn twice(h: &num_rational::Ratio<u64>) -> u64 {
    // h is a half-integer
    h.numer() * (2 / h.denom())
}

impl ReadBasis {
    pub fn new(seq: GrowthSequence) -> Result<Self> {
        if let Some(v) = seq.violations().first() {
            return Err(Error::InvalidSequence(v.to_string()));
        }
        let cases = (0..=seq.max_index())
            .map(|i| seq.classify_unchecked(i))
            .collect::<Result<Vec<_>>>()?;
        let e_memo = (0..cases.len()).map(|_| OnceLock::new()).collect();
        Ok(ReadBasis { seq, cases, e_memo })
    }

    pub fn sequence(&self) -> &GrowthSequence {
        &self.seq
    }

    pub fn max_index(&self) -> usize {
        self.seq.max_index()
    }

    pub fn case(&self, i: usize) -> Result<&IndexCase> {
        self.cases.get(i).ok_or(Error::WindowExceedsSequence {
            index: i,
            max: self.max_index(),
        })
    }

    /// One step of the recursion `e_i = own * f_i + mult * e_prev`.
    fn step(&self, i: usize) -> (ExactScalar, Option<(usize, ExactScalar)>) {
        let seq = &self.seq;
        match &self.cases[i] {
            IndexCase::Zero => (ExactScalar::one(), None),
            // f_i = a_{n-r} (e_i - e_{i - r a_n})
            IndexCase::A { n, r } => {
                let a = seq.a(n - r);
                let prev = i - *r * seq.a(*n) as usize;
                (
                    ExactScalar::from_rational(BigRational::new(1.into(), a.into())),
                    Some((prev, ExactScalar::one())),
                )
            }
            IndexCase::B { n, h, .. } => (decay(twice(h), i, seq.a(*n), -1), None),
            // f_i = e_i - b_n e_{i - b_n}
            IndexCase::C { n, .. } => {
                let b = seq.b(*n);
                (ExactScalar::one(), Some((i - b as usize, int(b))))
            }
            IndexCase::D { n, h, .. } => (decay(twice(h), i, seq.b(*n), -1), None),
        }
    }

    /// `f_i` in `e` coordinates: at most two entries, the one at `i` nonzero.
    pub fn f_in_e(&self, i: usize) -> Result<SparseVector> {
        let case = self.case(i)?;
        let seq = &self.seq;
        let mut v = SparseVector::new();
        match case {
            IndexCase::Zero => v.set(0, ExactScalar::one()),
            IndexCase::A { n, r } => {
                let a = seq.a(n - r);
                v.set(i, int(a));
                v.set(i - r * seq.a(*n) as usize, -int(a));
            }
            IndexCase::B { n, h, .. } => v.set(i, decay(twice(h), i, seq.a(*n), 1)),
            IndexCase::C { n, .. } => {
                let b = seq.b(*n);
                v.set(i, ExactScalar::one());
                v.set(i - b as usize, -int(b));
            }
            IndexCase::D { n, h, .. } => v.set(i, decay(twice(h), i, seq.b(*n), 1)),
        }
        Ok(v)
    }

    /// `e_i` in `f` coordinates, memoized. Support lies in `[0, i]`.
    pub fn e_in_f(&self, i: usize) -> Result<&SparseVector> {
        let cell = self.e_memo.get(i).ok_or(Error::WindowExceedsSequence {
            index: i,
            max: self.max_index(),
        })?;
        Ok(cell.get_or_init(|| {
            let (own, prev) = self.step(i);
            let mut v = SparseVector::single(i, own);
            if let Some((j, mult)) = prev {
                let tail = self.e_in_f(j).expect("predecessor is in range");
                v.add_scaled(tail, &mult);
            }
            v
        }))
    }

    /// Number of recursion steps in the expansion of `e_i`.
    pub fn chain_length(&self, i: usize) -> Result<usize> {
        self.case(i)?;
        let mut len = 0;
        let mut cur = i;
        while let (_, Some((prev, _))) = self.step(cur) {
            len += 1;
            cur = prev;
        }
        Ok(len)
    }

    fn check_window(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.max_index() + 1 {
            return Err(Error::WindowExceedsSequence {
                index: n.saturating_sub(1),
                max: self.max_index(),
            });
        }
        Ok(())
    }

    /// `Q` on the leading `n x n` window, in `f` coordinates.
    pub fn q_window(&self, n: usize) -> Result<Window> {
        self.check_window(n)?;
        let cols = (0..n)
            .map(|j| self.e_in_f(j).map(|v| v.truncated(n)))
            .collect::<Result<Vec<_>>>()?;
        Window::from_columns(n, BasisTag::F, cols)
    }

    /// `Q^{-1}` on the leading `n x n` window.
    pub fn qinv_window(&self, n: usize) -> Result<Window> {
        self.check_window(n)?;
        let cols = (0..n).map(|j| self.f_in_e(j)).collect::<Result<Vec<_>>>()?;
        Window::from_columns(n, BasisTag::F, cols)
    }

    pub fn support_profile(&self, n: usize) -> Result<SupportProfile> {
        let q = self.q_window(n)?;
        let qinv = self.qinv_window(n)?;
        let max_chain = (0..n)
            .map(|j| self.chain_length(j))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        Ok(SupportProfile {
            size: n,
            q_rows: q.row_counts(),
            q_cols: q.col_counts(),
            qinv_rows: qinv.row_counts(),
            qinv_cols: qinv.col_counts(),
            max_chain,
        })
    }
}
