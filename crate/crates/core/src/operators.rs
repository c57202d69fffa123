//! Windows of the operators in the commuting chain `T - S1 - S2 - K`.
//!
//! All windows act on `F_N = span{f_0, ..., f_{N-1}} = span{e_0, ..., e_{N-1}}`
//! and are written in `f` coordinates unless tagged otherwise. `T` is taken
//! as its compression to `F_N` along the `e` basis, i.e. `e_j -> e_{j+1}` for
//! `j < N-1` and `e_{N-1} -> 0`. On `f` coordinates this is `Q S Q^{-1}`
//! with the `N x N` shift `S`. Its columns agree with the true `T f_j` for
//! every `j < N-1`; `S2` and `K` are exact sections.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::basis::{ReadBasis, SparseVector};
use crate::enclosure::{Enclosure, Evaluator};
use crate::error::{Error, Result};
use crate::scalar::ExactScalar;
use crate::window::{BasisTag, Window};

/// `S f_j = f_{j+1}`; the last basis vector maps to zero.
pub fn shift_window(n: usize) -> Window {
    let entries = (0..n.saturating_sub(1)).map(|j| (j + 1, j, ExactScalar::one()));
    Window::from_entries(n, BasisTag::F, entries).expect("entries lie in the window")
}

/// `K f_0 = f_0`, `K f_i = 0` for `i > 0`.
pub fn k_window(n: usize) -> Window {
    Window::from_entries(n, BasisTag::F, [(0, 0, ExactScalar::one())]).expect("n >= 1")
}

/// The 0/1 diagonal selecting indices divisible by `m`.
pub fn residue_projection(n: usize, m: u64, basis: BasisTag) -> Window {
    Window::diagonal(n, basis, |j| {
        if (j as u64).is_multiple_of(m) {
            ExactScalar::one()
        } else {
            ExactScalar::zero()
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedFormCheck {
    pub holds: bool,
    pub counterexample: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormVerdict {
    AtMostOne,
    AboveOne,
    Straddles,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnNorm {
    pub column: usize,
    pub block: usize,
    pub norm: Enclosure,
    pub verdict: NormVerdict,
    pub bits: u32,
}

/// Enclosures of `||T f_j||_1`. Exploratory: the bound `<= 1` is only
/// expected for sequences growing fast enough, which is not checked here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormReport {
    pub columns: Vec<ColumnNorm>,
    /// `(block, enclosure of the maximum over the block)`.
    pub block_maxima: Vec<(usize, Enclosure)>,
    pub overall_max: Enclosure,
    pub precision_bits: u32,
    pub max_bits_used: u32,
}

fn interval_max(a: &Enclosure, b: &Enclosure) -> Enclosure {
    Enclosure::new(
        std::cmp::max(a.lo().clone(), b.lo().clone()),
        std::cmp::max(a.hi().clone(), b.hi().clone()),
    )
}

/// Windows of size `n` over a fixed basis, with `Q`, `Q^{-1}` and `T`
/// built once.
#[derive(Debug)]
pub struct ReadWindows<'a> {
    basis: &'a ReadBasis,
    n: usize,
    q: Window,
    qinv: Window,
    t: OnceLock<Window>,
}

impl<'a> ReadWindows<'a> {
    pub fn new(basis: &'a ReadBasis, n: usize) -> Result<Self> {
        let q = basis.q_window(n)?;
        let qinv = basis.qinv_window(n)?;
        Ok(ReadWindows {
            basis,
            n,
            q,
            qinv,
            t: OnceLock::new(),
        })
    }

    pub fn basis(&self) -> &ReadBasis {
        self.basis
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> &Window {
        &self.q
    }

    pub fn qinv(&self) -> &Window {
        &self.qinv
    }

    pub fn shift(&self) -> Window {
        shift_window(self.n)
    }

    pub fn identity(&self) -> Window {
        Window::identity(self.n, BasisTag::F)
    }

    /// `T = Q S Q^{-1}` on the window.
    pub fn t(&self) -> &Window {
        self.t.get_or_init(|| {
            self.q
                .product(&self.shift())
                .and_then(|qs| qs.product(&self.qinv))
                .expect("windows share size and basis")
        })
    }

    /// `T` column by column: expand `f_j` over `e`, shift every index, expand
    /// back over `f`, dropping `e_N` and beyond.
    pub fn t_by_chase(&self) -> Result<Window> {
        let cols = (0..self.n)
            .map(|j| {
                let mut col = SparseVector::new();
                for (k, c) in self.basis.f_in_e(j)?.iter() {
                    if k + 1 < self.n {
                        col.add_scaled(self.basis.e_in_f(k + 1)?, c);
                    }
                }
                Ok(col)
            })
            .collect::<Result<Vec<_>>>()?;
        Window::from_columns(self.n, BasisTag::F, cols)
    }

    /// `S2^{(m)} = Q D_m Q^{-1}` where `D_m` keeps `e_i` for `m | i`.
    pub fn s2(&self, m: u64) -> Result<Window> {
        if m == 0 {
            return Err(Error::ZeroModulus);
        }
        if let Some(term) = self.basis.sequence().first_not_divisible(m) {
            return Err(Error::Divisibility { m, term });
        }
        self.q
            .product(&residue_projection(self.n, m, BasisTag::F))?
            .product(&self.qinv)
    }

    pub fn k(&self) -> Window {
        k_window(self.n)
    }

    /// Checks `S2 f_i = f_i` when `m | i` and `S2 f_i = 0` otherwise.
    pub fn s2_closed_form_check(&self, m: u64) -> Result<ClosedFormCheck> {
        let s2 = self.s2(m)?;
        for i in 0..self.n {
            let image = s2.apply(&SparseVector::unit(i))?;
            let expected = if (i as u64).is_multiple_of(m) {
                SparseVector::unit(i)
            } else {
                SparseVector::new()
            };
            if image != expected {
                return Ok(ClosedFormCheck {
                    holds: false,
                    counterexample: Some(i),
                });
            }
        }
        Ok(ClosedFormCheck {
            holds: true,
            counterexample: None,
        })
    }

    /// `Q^{-1} A Q`, the action of `A` in `e` coordinates.
    pub fn conjugate_to_e(&self, a: &Window) -> Result<Window> {
        if a.basis() != BasisTag::F {
            return Err(Error::BasisMismatch(a.basis(), BasisTag::F));
        }
        Ok(self
            .qinv
            .product(a)?
            .product(&self.q)?
            .with_basis(BasisTag::E))
    }

    /// `Q A Q^{-1}` for `A` in `e` coordinates.
    pub fn conjugate_to_f(&self, a: &Window) -> Result<Window> {
        if a.basis() != BasisTag::E {
            return Err(Error::BasisMismatch(a.basis(), BasisTag::E));
        }
        let a = a.clone().with_basis(BasisTag::F);
        self.q.product(&a)?.product(&self.qinv)
    }
}

/// `T f_j` in `f` coordinates, untruncated. Needs `e_{j+1}`.
pub fn t_column(basis: &ReadBasis, j: usize) -> Result<SparseVector> {
    let mut col = SparseVector::new();
    for (k, c) in basis.f_in_e(j)?.iter() {
        col.add_scaled(basis.e_in_f(k + 1)?, c);
    }
    Ok(col)
}

/// Scans `||T f_j||_1` for `j < n`, doubling the precision of any column
/// whose enclosure straddles 1, up to `cap_bits`.
pub fn norm_scan(basis: &ReadBasis, n: usize, bits: u32, cap_bits: u32) -> Result<NormReport> {
    if n > basis.max_index() {
        return Err(Error::WindowExceedsSequence {
            index: n,
            max: basis.max_index(),
        });
    }
    let one = BigRational::from_integer(BigInt::from(1));
    let bits = bits.max(16);
    let cap_bits = cap_bits.max(bits);
    let mut evaluators = vec![Evaluator::new(bits)];
    let mut columns = Vec::with_capacity(n);
    for j in 0..n {
        let col = t_column(basis, j)?;
        let mut level = 0;
        let (norm, verdict) = loop {
            if evaluators.len() <= level {
                evaluators.push(Evaluator::new(bits << level));
            }
            let ev = &mut evaluators[level];
            let norm = col.iter().fold(Enclosure::zero(), |acc, (_, x)| {
                acc.add(&ev.evaluate(x).abs())
            });
            let verdict = if norm.le(&one) {
                NormVerdict::AtMostOne
            } else if norm.gt(&one) {
                NormVerdict::AboveOne
            } else {
                NormVerdict::Straddles
            };
            if verdict != NormVerdict::Straddles || (bits << (level + 1)) > cap_bits {
                break (norm, verdict);
            }
            level += 1;
        };
        columns.push(ColumnNorm {
            column: j,
            block: basis.case(j)?.block(),
            norm,
            verdict,
            bits: bits << level,
        });
    }
    let mut block_maxima: Vec<(usize, Enclosure)> = Vec::new();
    for c in &columns {
        match block_maxima.last_mut() {
            Some((b, m)) if *b == c.block => *m = interval_max(m, &c.norm),
            _ => block_maxima.push((c.block, c.norm.clone())),
        }
    }
    let overall_max = columns
        .iter()
        .map(|c| c.norm.clone())
        .reduce(|a, b| interval_max(&a, &b))
        .unwrap_or_else(Enclosure::zero);
    let max_bits_used = columns.iter().map(|c| c.bits).max().unwrap_or(bits);
    Ok(NormReport {
        columns,
        block_maxima,
        overall_max,
        precision_bits: bits,
        max_bits_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::GrowthSequence;
    use crate::window::NonScalarWitness;

    fn toy() -> ReadBasis {
        ReadBasis::new(GrowthSequence::from_interleaved(&[2, 4, 8, 10]).unwrap()).unwrap()
    }

    fn sv(pairs: &[(usize, ExactScalar)]) -> SparseVector {
        pairs.iter().cloned().collect()
    }

    #[test]
    fn shift_examples() {
        assert!(shift_window(1).is_zero());
        let s3 = shift_window(3);
        assert_eq!(s3.entries().len(), 2);
        assert_eq!(s3.entry(1, 0), Some(&ExactScalar::one()));
        assert_eq!(s3.entry(2, 1), Some(&ExactScalar::one()));
        assert!(shift_window(5).pow(5).is_zero());
        assert!(!shift_window(5).pow(4).is_zero());
    }

    #[test]
    fn t_columns() {
        let b = toy();
        let w = ReadWindows::new(&b, 36).unwrap();
        let t = w.t();
        assert_eq!(t.column(0), &SparseVector::unit(1));
        assert_eq!(
            t.column(1),
            &sv(&[(0, ExactScalar::one()), (2, ExactScalar::one())])
        );
        assert_eq!(
            t.column(2),
            &sv(&[
                (1, ExactScalar::from_integer(-1)),
                (3, ExactScalar::from_power_of_two(1, 1).unwrap())
            ])
        );
        for j in 0..35 {
            assert_eq!(t.column(j), &t_column(&b, j).unwrap(), "column {j}");
        }
    }

    #[test]
    fn t_two_routes_agree_and_nilpotent() {
        let b = toy();
        for n in [1, 2, 7, 20, 36, 37] {
            let w = ReadWindows::new(&b, n).unwrap();
            assert_eq!(w.t(), &w.t_by_chase().unwrap(), "n={n}");
            assert!(w.t().pow(n as u32).is_zero());
        }
    }

    #[test]
    fn s2_examples() {
        let b = toy();
        let w = ReadWindows::new(&b, 36).unwrap();
        assert_eq!(w.s2(1).unwrap(), w.identity());
        let s2 = w.s2(2).unwrap();
        assert_eq!(s2, residue_projection(36, 2, BasisTag::F));
        assert!(w
            .s2(2)
            .unwrap()
            .apply(&SparseVector::unit(3))
            .unwrap()
            .is_zero());
        assert!(matches!(
            w.s2(3),
            Err(Error::Divisibility { m: 3, term: 2 })
        ));
        assert_eq!(
            w.s2_closed_form_check(2).unwrap(),
            ClosedFormCheck {
                holds: true,
                counterexample: None
            }
        );

        let b4 =
            ReadBasis::new(GrowthSequence::from_interleaved(&[4, 8, 16, 24]).unwrap()).unwrap();
        let w4 = ReadWindows::new(&b4, 60).unwrap();
        let s = w4.s2(4).unwrap();
        assert_eq!(s.product(&s).unwrap(), s);
        assert!(w4.s2_closed_form_check(4).unwrap().holds);
    }

    #[test]
    fn k_examples() {
        assert_eq!(k_window(1), Window::identity(1, BasisTag::F));
        let k = k_window(9);
        assert_eq!(k.product(&k).unwrap(), k);
        assert!(k.is_rank_one());
        assert!(k.apply(&SparseVector::unit(3)).unwrap().is_zero());
    }

    #[test]
    fn chain_commutes() {
        let b = toy();
        let w = ReadWindows::new(&b, 36).unwrap();
        let t = w.t();
        let t2 = t.product(t).unwrap();
        let s2 = w.s2(2).unwrap();
        assert!(t.commutator(&t2).unwrap().is_zero());
        assert!(t2.commutator(&s2).unwrap().is_zero());
        assert!(s2.commutator(&w.k()).unwrap().is_zero());
        // T itself does not commute with S2 or K
        assert!(!t.commutator(&s2).unwrap().is_zero());
        assert!(!t.commutator(&w.k()).unwrap().is_zero());
        assert!(matches!(
            t2.non_scalar_witness(),
            Some(NonScalarWitness::OffDiagonal { .. })
        ));
        assert!(s2.non_scalar_witness().is_some());
        assert!(w.k().non_scalar_witness().is_some());
    }

    #[test]
    fn conjugation_gives_shift() {
        let b = toy();
        let w = ReadWindows::new(&b, 36).unwrap();
        let tt = w.conjugate_to_e(w.t()).unwrap();
        assert_eq!(tt, shift_window(36).with_basis(BasisTag::E));
        assert_eq!(&w.conjugate_to_f(&tt).unwrap(), w.t());
        assert!(w.conjugate_to_f(w.t()).is_err());
    }

    #[test]
    fn norm_scan_toy() {
        let b = toy();
        let report = norm_scan(&b, 36, 64, 1024).unwrap();
        let one = BigRational::from_integer(1.into());
        let two = BigRational::from_integer(2.into());
        assert_eq!(report.columns[0].norm, Enclosure::point(one));
        assert_eq!(report.columns[0].verdict, NormVerdict::AtMostOne);
        assert_eq!(report.columns[1].norm, Enclosure::point(two.clone()));
        assert_eq!(report.columns[1].verdict, NormVerdict::AboveOne);
        // T f_4 = 2^{1/2} f_5
        let c4 = &report.columns[4].norm;
        assert!((c4.midpoint_f64() - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(report.overall_max.gt(&BigRational::from_integer(1.into())));
        assert!(norm_scan(&b, 37, 64, 1024).is_err());
    }
}
