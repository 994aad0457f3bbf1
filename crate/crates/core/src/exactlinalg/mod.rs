//! Exact linear algebra over the integers and prime fields.

pub mod matrix;
pub mod module;
pub mod normal_form;
pub mod ring;

pub use matrix::{IntMatrix, Matrix};
pub use module::{induced_endomorphism, induced_map, FgModule, ModuleSummary};
pub use normal_form::{kernel_basis, rank, row_echelon, smith, smith_normal_form, LatticeBasis, Smith};
pub use ring::{EuclideanRing, Integers, PrimeField, RingSpec};
