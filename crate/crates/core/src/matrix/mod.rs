//! Block-sparse matrix values, products with truncation, norms, dense
//! oracles and Matrix Market I/O.

pub mod dense;
mod general;
mod herm;
pub mod market;
mod norm;

pub use general::{add_scaled, multiply, GeneralMatrix, BLOCK_SIZE};
pub(crate) use general::TileBuilder;
pub use herm::{multiply_hermitian, HermMatrix};
pub use norm::{lanczos_extreme, norm, NormKind, SpectralEstimate, LANCZOS_MAX_ITER, SPECTRAL_TOL};

use crate::error::Result;
use crate::scalar::Scalar;

/// Truncate any matrix value: entries with magnitude below `threshold` are removed.
pub fn truncate<T: Scalar>(a: &GeneralMatrix<T>, threshold: f64) -> Result<GeneralMatrix<T>> {
    a.truncate(threshold)
}
