//! Recursive and localized inverse factorization `Z Z* = S⁻¹` of sparse
//! Hermitian positive definite matrices with localization structure.
//!
//! The crate is organized bottom-up:
//!
//! - [`matrix`]: block-sparse matrices with magnitude truncation, norms,
//!   dense eigendecomposition oracles and Matrix Market I/O.
//! - [`geometry`]: index coordinates, recursive coordinate bisection and
//!   distance to a cut.
//! - [`refine`]: polynomial iterative refinement of an approximate inverse
//!   factor, regular and localized, with a parameterless stopping rule.
//! - [`factor`]: the recursive and localized factorization drivers over a
//!   binary partition tree, with per-level correction matrices.
//! - [`systems`]: lattice benchmark systems, the Wilson matrix and overlap
//!   matrix ingestion.
//! - [`analysis`]: decay profiles, entry counts, least-squares scaling fits
//!   and the stability experiment.
//! - [`cli`]: the experiment commands behind the `locinv` binary.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod factor;
pub mod geometry;
pub mod matrix;
pub mod refine;
pub mod scalar;
pub mod systems;

pub use error::{Error, Result};
pub use matrix::{GeneralMatrix, HermMatrix, NormKind};
pub use scalar::Scalar;
