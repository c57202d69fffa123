//! Commutant computations on windows.
//!
//! A window commuting with the shift is a lower-triangular Toeplitz matrix
//! `p(S)`. Since `Q^{-1} T Q = S`, a window `R` commuting with `T` satisfies
//! `Q^{-1} R Q = p(S)` and hence `R = p(T)`; the coefficients are read off
//! the first column of `Q^{-1} R Q`. Everything here is a statement about
//! finite windows; boundedness of `p(T)` on `l_1` is not addressed.

use crate::error::Result;
use crate::operators::ReadWindows;
use crate::scalar::ExactScalar;
use crate::window::{BasisTag, EntryWitness, Window};

/// Coefficients `p_0, ..., p_{k}` of a truncated power series.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeriesWindow {
    coeffs: Vec<ExactScalar>,
}

impl SeriesWindow {
    pub fn new(coeffs: Vec<ExactScalar>) -> Self {
        SeriesWindow { coeffs }
    }

    pub fn from_integers(coeffs: &[i64]) -> Self {
        Self::new(
            coeffs
                .iter()
                .map(|&c| ExactScalar::from_integer(c))
                .collect(),
        )
    }

    pub fn coeffs(&self) -> &[ExactScalar] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> ExactScalar {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    /// Index of the last nonzero coefficient.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    /// Same series without trailing zeros.
    pub fn trimmed(&self) -> SeriesWindow {
        let len = self.degree().map_or(0, |d| d + 1);
        SeriesWindow::new(self.coeffs[..len].to_vec())
    }

    /// Equality up to trailing zeros.
    pub fn same_series(&self, other: &SeriesWindow) -> bool {
        self.trimmed() == other.trimmed()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommutantSolution {
    pub series: SeriesWindow,
    pub residual_zero: bool,
    pub failure_witness: Option<EntryWitness>,
}

impl CommutantSolution {
    fn failure(witness: EntryWitness) -> Self {
        CommutantSolution {
            series: SeriesWindow::default(),
            residual_zero: false,
            failure_witness: Some(witness),
        }
    }
}

/// `p(S)`: entry `(i, j)` is `p_{i-j}` for `i >= j`.
pub fn toeplitz_from_series(p: &SeriesWindow, n: usize, basis: BasisTag) -> Window {
    let entries = (0..n).flat_map(|j| {
        (j..n).filter_map(move |i| {
            let c = p.coeffs.get(i - j)?;
            (!c.is_zero()).then(|| (i, j, c.clone()))
        })
    });
    Window::from_entries(n, basis, entries).expect("entries lie in the window")
}

/// Tests `AS = SA` through the identities `(AS)_ij = a_{i,j+1}` and
/// `(SA)_ij = a_{i-1,j}` (zero for `i = 0`), at every `(i, j)` with
/// `j + 1 < N` so that both sides only read entries inside the window.
///
/// On success the series is the first column of `A`. On failure the witness
/// is the first `(i, j)` in row-major order with `(AS - SA)_ij != 0`.
pub fn shift_commutant_extract(a: &Window) -> CommutantSolution {
    let n = a.size();
    let zero = ExactScalar::zero();
    for i in 0..n {
        for j in 0..n.saturating_sub(1) {
            let left = a.entry(i, j + 1).unwrap_or(&zero);
            let right = if i == 0 {
                &zero
            } else {
                a.entry(i - 1, j).unwrap_or(&zero)
            };
            if left != right {
                return CommutantSolution::failure(EntryWitness {
                    row: i,
                    col: j,
                    value: left - right,
                });
            }
        }
    }
    let coeffs = (0..n)
        .map(|i| a.entry(i, 0).cloned().unwrap_or_default())
        .collect();
    CommutantSolution {
        series: SeriesWindow::new(coeffs),
        residual_zero: true,
        failure_witness: None,
    }
}

/// `Q^{-1} A Q`.
pub fn conjugate_to_e_basis(a: &Window, windows: &ReadWindows<'_>) -> Result<Window> {
    windows.conjugate_to_e(a)
}

/// Whether `Q^{-1} t Q` is exactly the shift window.
pub fn is_conjugate_to_shift(t: &Window, windows: &ReadWindows<'_>) -> Result<bool> {
    let conj = windows.conjugate_to_e(t)?;
    Ok(conj == windows.shift().with_basis(BasisTag::E))
}

pub fn verify_ttilde_is_shift(windows: &ReadWindows<'_>) -> Result<bool> {
    is_conjugate_to_shift(windows.t(), windows)
}

/// `sum_k p_k T^k` on the window, by Horner's rule. Terms beyond `N - 1`
/// vanish because `T^N = 0` on the window.
pub fn series_apply(p: &SeriesWindow, windows: &ReadWindows<'_>) -> Window {
    let n = windows.size();
    let t = windows.t();
    let degree = p.degree().map_or(0, |d| d.min(n.saturating_sub(1)));
    let id = windows.identity();
    let mut acc = id.scale(&p.coeff(degree));
    for k in (0..degree).rev() {
        acc = acc
            .product(t)
            .and_then(|x| x.add(&id.scale(&p.coeff(k))))
            .expect("same shape");
    }
    acc
}

/// `Q p(S) Q^{-1}`, the second route to `p(T)`.
pub fn series_apply_by_conjugation(p: &SeriesWindow, windows: &ReadWindows<'_>) -> Result<Window> {
    windows.conjugate_to_f(&toeplitz_from_series(p, windows.size(), BasisTag::E))
}

/// Finds `p` with `R = p(T)` on the window, or a nonzero entry of
/// `[T, R]` when `R` does not commute with `T`.
pub fn solve_commutant(r: &Window, windows: &ReadWindows<'_>) -> Result<CommutantSolution> {
    let comm = windows.t().commutator(r)?;
    if let Some(w) = comm.first_nonzero() {
        return Ok(CommutantSolution::failure(w));
    }
    let extracted = shift_commutant_extract(&windows.conjugate_to_e(r)?);
    if !extracted.residual_zero {
        return Ok(extracted);
    }
    let series = extracted.series.trimmed();
    let rebuilt = series_apply(&series, windows);
    let residual = rebuilt.sub(r)?;
    Ok(CommutantSolution {
        residual_zero: residual.is_zero(),
        failure_witness: residual.first_nonzero(),
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ReadBasis;
    use crate::growth::GrowthSequence;
    use crate::operators::shift_window;

    fn toy() -> ReadBasis {
        ReadBasis::new(GrowthSequence::from_interleaved(&[2, 4, 8, 10]).unwrap()).unwrap()
    }

    #[test]
    fn toeplitz_examples() {
        let id = toeplitz_from_series(&SeriesWindow::from_integers(&[1]), 5, BasisTag::F);
        assert_eq!(id, Window::identity(5, BasisTag::F));
        let s = toeplitz_from_series(&SeriesWindow::from_integers(&[0, 1]), 5, BasisTag::F);
        assert_eq!(s, shift_window(5));
        let p = toeplitz_from_series(&SeriesWindow::from_integers(&[7, 8, 9]), 4, BasisTag::E);
        for i in 0..4usize {
            for j in 0..4usize {
                let expected = match i.checked_sub(j) {
                    Some(d) if d < 3 => Some(ExactScalar::from_integer(7 + d as i64)),
                    _ => None,
                };
                assert_eq!(p.entry(i, j).cloned(), expected, "({i},{j})");
            }
        }
    }

    #[test]
    fn extract_examples() {
        let sol = shift_commutant_extract(&Window::identity(4, BasisTag::E));
        assert!(sol.residual_zero);
        assert!(sol.series.same_series(&SeriesWindow::from_integers(&[1])));

        let lone = Window::from_entries(4, BasisTag::E, [(0, 1, ExactScalar::one())]).unwrap();
        let sol = shift_commutant_extract(&lone);
        assert!(!sol.residual_zero);
        let w = sol.failure_witness.unwrap();
        assert_eq!((w.row, w.col), (0, 0));
        assert!(!w.value.is_zero());
    }

    #[test]
    fn series_apply_examples() {
        let b = toy();
        let w = ReadWindows::new(&b, 36).unwrap();
        assert_eq!(
            series_apply(&SeriesWindow::from_integers(&[1]), &w),
            w.identity()
        );
        assert_eq!(
            &series_apply(&SeriesWindow::from_integers(&[0, 1]), &w),
            w.t()
        );
        let p = SeriesWindow::from_integers(&[2, 0, 3]);
        let r = series_apply(&p, &w);
        let t2 = w.t().product(w.t()).unwrap();
        let direct = w
            .identity()
            .scale(&ExactScalar::from_integer(2))
            .add(&t2.scale(&ExactScalar::from_integer(3)))
            .unwrap();
        assert_eq!(r, direct);
        assert_eq!(r, series_apply_by_conjugation(&p, &w).unwrap());
    }

    #[test]
    fn solve_examples() {
        let b = toy();
        let w = ReadWindows::new(&b, 36).unwrap();
        let p = SeriesWindow::from_integers(&[2, 0, 3]);
        let sol = solve_commutant(&series_apply(&p, &w), &w).unwrap();
        assert!(sol.residual_zero);
        assert_eq!(sol.series, p);

        let sol = solve_commutant(&w.identity(), &w).unwrap();
        assert_eq!(sol.series, SeriesWindow::from_integers(&[1]));

        let sol = solve_commutant(&w.k(), &w).unwrap();
        assert!(!sol.residual_zero);
        let wit = sol.failure_witness.unwrap();
        // [T, K] f_1 = -K T f_1 = -K (f_0 + f_2) = -f_0
        assert_eq!((wit.row, wit.col), (0, 1));
        assert_eq!(wit.value, ExactScalar::from_integer(-1));
    }

    #[test]
    fn ttilde_is_shift() {
        let b = toy();
        for n in [1, 2, 36] {
            let w = ReadWindows::new(&b, n).unwrap();
            assert!(verify_ttilde_is_shift(&w).unwrap());
        }
        let w = ReadWindows::new(&b, 36).unwrap();
        let mut bad = w.t().clone();
        bad.set(5, 4, ExactScalar::from_integer(7)).unwrap();
        assert!(!is_conjugate_to_shift(&bad, &w).unwrap());
        let s2 = w.s2(2).unwrap();
        assert_eq!(
            conjugate_to_e_basis(&s2, &w).unwrap(),
            crate::operators::residue_projection(36, 2, BasisTag::E)
        );
    }
}
