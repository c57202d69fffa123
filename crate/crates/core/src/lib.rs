//! Exact finite windows of C. J. Read's operator `T` on `l_1`, the commuting
//! chain `T - T^2 - S2 - K` ending in a rank-one operator, and the
//! description of the commutant of `T` as power series in `T`.

pub mod basis;
pub mod commutant;
pub mod enclosure;
pub mod error;
pub mod growth;
pub mod operators;
pub mod scalar;
pub mod window;

pub use basis::{ReadBasis, SparseVector, SupportProfile};
pub use commutant::{CommutantSolution, SeriesWindow};
pub use enclosure::{evaluate, Enclosure, Evaluator};
pub use error::{Error, Result};
pub use growth::{GrowthSequence, IndexCase, ValidationReport, Violation};
pub use operators::{k_window, norm_scan, shift_window, NormReport, ReadWindows};
pub use scalar::{DyadicExponent, ExactScalar};
pub use window::{BasisTag, EntryWitness, NonScalarWitness, Window};
