//! Finite `N x N` windows over exact scalars.
//!
//! Entry `(i, j)` is the `i`-th coordinate of the image of the `j`-th basis
//! vector, so columns are stored as sparse vectors. A window is an operator
//! on `span{f_0, ..., f_{N-1}}` (equivalently `span{e_0, ..., e_{N-1}}`);
//! products are ordinary finite matrix products.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::basis::SparseVector;
use crate::error::{Error, Result};
use crate::scalar::ExactScalar;

/// Which basis the coordinates of a window refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisTag {
    F,
    E,
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisTag::F => "f",
            BasisTag::E => "e",
        })
    }
}

impl FromStr for BasisTag {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "f" => Ok(BasisTag::F),
            "e" => Ok(BasisTag::E),
            other => Err(format!("unknown basis {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Triangularity {
    Diagonal,
    Lower,
    Upper,
    Neither,
}

/// Evidence that a window is not a multiple of the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NonScalarWitness {
    OffDiagonal { row: usize, col: usize },
    DiagonalsDiffer { first: usize, second: usize },
}

/// One nonzero entry, reported as a counterexample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryWitness {
    pub row: usize,
    pub col: usize,
    pub value: ExactScalar,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    size: usize,
    basis: BasisTag,
    cols: Vec<SparseVector>,
}

impl Window {
    pub fn zero(size: usize, basis: BasisTag) -> Self {
        Window {
            size,
            basis,
            cols: vec![SparseVector::new(); size],
        }
    }

    pub fn identity(size: usize, basis: BasisTag) -> Self {
        Self::diagonal(size, basis, |_| ExactScalar::one())
    }

    pub fn diagonal(size: usize, basis: BasisTag, f: impl Fn(usize) -> ExactScalar) -> Self {
        Window {
            size,
            basis,
            cols: (0..size).map(|j| SparseVector::single(j, f(j))).collect(),
        }
    }

    pub fn from_columns(size: usize, basis: BasisTag, cols: Vec<SparseVector>) -> Result<Self> {
        if cols.len() != size {
            return Err(Error::SizeMismatch(size, cols.len()));
        }
        for (col, v) in cols.iter().enumerate() {
            if let Some(row) = v.degree().filter(|&r| r >= size) {
                return Err(Error::OutOfWindow { row, col, size });
            }
        }
        Ok(Window { size, basis, cols })
    }

    pub fn from_entries(
        size: usize,
        basis: BasisTag,
        entries: impl IntoIterator<Item = (usize, usize, ExactScalar)>,
    ) -> Result<Self> {
        let mut w = Self::zero(size, basis);
        for (row, col, x) in entries {
            if row >= size || col >= size {
                return Err(Error::OutOfWindow { row, col, size });
            }
            w.cols[col].add_at(row, &x);
        }
        Ok(w)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    /// Same entries, relabelled basis.
    pub fn with_basis(mut self, basis: BasisTag) -> Self {
        self.basis = basis;
        self
    }

    pub fn column(&self, j: usize) -> &SparseVector {
        &self.cols[j]
    }

    pub fn columns(&self) -> &[SparseVector] {
        &self.cols
    }

    pub fn entry(&self, row: usize, col: usize) -> Option<&ExactScalar> {
        self.cols.get(col)?.get(row)
    }

    pub fn set(&mut self, row: usize, col: usize, x: ExactScalar) -> Result<()> {
        if row >= self.size || col >= self.size {
            return Err(Error::OutOfWindow {
                row,
                col,
                size: self.size,
            });
        }
        self.cols[col].set(row, x);
        Ok(())
    }

    /// Nonzero entries in row-major order.
    pub fn entries(&self) -> Vec<(usize, usize, &ExactScalar)> {
        let mut out: Vec<_> = self
            .cols
            .iter()
            .enumerate()
            .flat_map(|(j, c)| c.iter().map(move |(i, x)| (i, j, x)))
            .collect();
        out.sort_by_key(|&(i, j, _)| (i, j));
        out
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(SparseVector::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(SparseVector::is_zero)
    }

    pub fn first_nonzero(&self) -> Option<EntryWitness> {
        self.entries().first().map(|&(row, col, x)| EntryWitness {
            row,
            col,
            value: x.clone(),
        })
    }

    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.size];
        for c in &self.cols {
            for (i, _) in c.iter() {
                counts[i] += 1;
            }
        }
        counts
    }

    pub fn col_counts(&self) -> Vec<usize> {
        self.cols.iter().map(SparseVector::len).collect()
    }

    pub fn triangularity(&self) -> Triangularity {
        let mut below = false;
        let mut above = false;
        for (j, c) in self.cols.iter().enumerate() {
            for (i, _) in c.iter() {
                below |= i > j;
                above |= i < j;
            }
        }
        match (below, above) {
            (false, false) => Triangularity::Diagonal,
            (true, false) => Triangularity::Lower,
            (false, true) => Triangularity::Upper,
            (true, true) => Triangularity::Neither,
        }
    }

    pub fn is_lower_triangular(&self) -> bool {
        matches!(
            self.triangularity(),
            Triangularity::Diagonal | Triangularity::Lower
        )
    }

    pub fn is_upper_triangular(&self) -> bool {
        matches!(
            self.triangularity(),
            Triangularity::Diagonal | Triangularity::Upper
        )
    }

    /// Every diagonal entry is nonzero.
    pub fn has_full_diagonal(&self) -> bool {
        (0..self.size).all(|j| self.entry(j, j).is_some())
    }

    /// Leading `n x n` principal submatrix.
    pub fn leading(&self, n: usize) -> Result<Window> {
        if n > self.size {
            return Err(Error::SizeMismatch(self.size, n));
        }
        Ok(Window {
            size: n,
            basis: self.basis,
            cols: self.cols[..n].iter().map(|c| c.truncated(n)).collect(),
        })
    }

    fn check_compatible(&self, other: &Window) -> Result<()> {
        if self.size != other.size {
            return Err(Error::SizeMismatch(self.size, other.size));
        }
        if self.basis != other.basis {
            return Err(Error::BasisMismatch(self.basis, other.basis));
        }
        Ok(())
    }

    /// `self * other`, `c_ij = sum_k a_ik b_kj`. Columns are computed in
    /// parallel; the result does not depend on scheduling.
    pub fn product(&self, other: &Window) -> Result<Window> {
        self.check_compatible(other)?;
        let cols = other
            .cols
            .par_iter()
            .map(|b| {
                let mut out = SparseVector::new();
                for (k, x) in b.iter() {
                    out.add_scaled(&self.cols[k], x);
                }
                out
            })
            .collect();
        Ok(Window {
            size: self.size,
            basis: self.basis,
            cols,
        })
    }

    pub fn add(&self, other: &Window) -> Result<Window> {
        self.check_compatible(other)?;
        let cols = self
            .cols
            .iter()
            .zip(&other.cols)
            .map(|(a, b)| {
                let mut c = a.clone();
                c.add_scaled(b, &ExactScalar::one());
                c
            })
            .collect();
        Ok(Window {
            size: self.size,
            basis: self.basis,
            cols,
        })
    }

    pub fn sub(&self, other: &Window) -> Result<Window> {
        self.add(&other.scale(&ExactScalar::from_integer(-1)))
    }

    pub fn scale(&self, c: &ExactScalar) -> Window {
        Window {
            size: self.size,
            basis: self.basis,
            cols: self.cols.iter().map(|v| v.scaled(c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Window {
        let mut out = Window::identity(self.size, self.basis);
        for _ in 0..k {
            out = out.product(self).expect("same shape");
        }
        out
    }

    /// `AB - BA`.
    pub fn commutator(&self, other: &Window) -> Result<Window> {
        self.product(other)?.sub(&other.product(self)?)
    }

    /// Matrix-vector product `y_i = sum_j a_ij x_j`.
    pub fn apply(&self, x: &SparseVector) -> Result<SparseVector> {
        if let Some(index) = x.degree().filter(|&d| d >= self.size) {
            return Err(Error::SupportOutOfWindow {
                index,
                size: self.size,
            });
        }
        let mut out = SparseVector::new();
        for (j, c) in x.iter() {
            out.add_scaled(&self.cols[j], c);
        }
        Ok(out)
    }

    /// `None` when the window is a multiple of the identity.
    pub fn non_scalar_witness(&self) -> Option<NonScalarWitness> {
        for (row, col, _) in self.entries() {
            if row != col {
                return Some(NonScalarWitness::OffDiagonal { row, col });
            }
        }
        let first = self.entry(0, 0);
        (1..self.size)
            .find(|&j| self.entry(j, j) != first)
            .map(|second| NonScalarWitness::DiagonalsDiffer { first: 0, second })
    }

    /// Rank exactly one: some column is nonzero and every 2x2 minor built
    /// from two columns vanishes.
    pub fn is_rank_one(&self) -> bool {
        let nonzero: Vec<&SparseVector> = self.cols.iter().filter(|c| !c.is_zero()).collect();
        let Some(pivot) = nonzero.first() else {
            return false;
        };
        let zero = ExactScalar::zero();
        nonzero.iter().skip(1).all(|c| {
            let rows: std::collections::BTreeSet<usize> =
                pivot.iter().chain(c.iter()).map(|(i, _)| i).collect();
            rows.iter().all(|&i| {
                rows.iter().all(|&k| {
                    let pi = pivot.get(i).unwrap_or(&zero);
                    let pk = pivot.get(k).unwrap_or(&zero);
                    let ci = c.get(i).unwrap_or(&zero);
                    let ck = c.get(k).unwrap_or(&zero);
                    (&(pi * ck) - &(pk * ci)).is_zero()
                })
            })
        })
    }

    /// Text dump: a header `N <size> basis <f|e>` followed by one
    /// `row col scalar` line per nonzero entry in row-major order.
    pub fn to_text(&self) -> String {
        let mut out = format!("N {} basis {}\n", self.size, self.basis);
        for (i, j, x) in self.entries() {
            out.push_str(&format!("{i} {j} {x}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> std::result::Result<Window, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or("empty matrix file")?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (size, basis) = match fields.as_slice() {
            ["N", n, "basis", b] => (
                n.parse::<usize>()
                    .map_err(|e| format!("bad size {n:?}: {e}"))?,
                b.parse::<BasisTag>()?,
            ),
            _ => return Err(format!("bad header {header:?}")),
        };
        let mut w = Window::zero(size, basis);
        for line in lines {
            let mut parts = line.splitn(3, ' ');
            let row = parts.next().and_then(|s| s.parse::<usize>().ok());
            let col = parts.next().and_then(|s| s.parse::<usize>().ok());
            let (Some(row), Some(col), Some(text)) = (row, col, parts.next()) else {
                return Err(format!("bad entry line {line:?}"));
            };
            let x: ExactScalar = text.parse().map_err(|e: Error| e.to_string())?;
            if w.entry(row, col).is_some() {
                return Err(format!("duplicate entry ({row}, {col})"));
            }
            w.set(row, col, x).map_err(|e| e.to_string())?;
        }
        Ok(w)
    }
}
