use crate::error::{Error, Result};
use crate::matrix::general::{block_len, multiply_upper_blocks, GeneralMatrix, TileBuilder, BLOCK_SIZE};
use crate::scalar::Scalar;

/// Hermitian matrix with symmetric storage.
///
/// Only tiles on or above the block diagonal are kept. Diagonal tiles are
/// stored in full, with the strictly lower part mirrored from the upper
/// part, so the logical `(j, i)` entry is always the exact conjugate of
/// `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMatrix<T: Scalar = f64> {
    upper: GeneralMatrix<T>,
}

/// Mirror the upper triangle of every diagonal tile onto its lower triangle.
fn mirror_diagonal_tiles<T: Scalar>(m: &mut GeneralMatrix<T>) {
    let n = m.rows();
    for b in 0..n.div_ceil(BLOCK_SIZE) {
        let w = block_len(n, b);
        if let Some(t) = m.diagonal_tile_mut(b) {
            for r in 0..w {
                t[r * w + r] = T::from_real(t[r * w + r].real());
                for c in r + 1..w {
                    t[c * w + r] = t[r * w + c].conjugate();
                }
            }
        }
    }
}

impl<T: Scalar> HermMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            upper: GeneralMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            upper: GeneralMatrix::identity(n),
        }
    }

    /// Build from triplets; entries with `i > j` are stored as `(j, i, conj(v))`.
    /// Duplicates are summed.
    pub fn from_triplets(n: usize, entries: impl IntoIterator<Item = (usize, usize, T)>) -> Self {
        let mut b = TileBuilder::new(n, n);
        for (i, j, v) in entries {
            assert!(i < n && j < n, "entry ({i},{j}) outside {n}x{n}");
            if i <= j {
                b.add(i, j, v);
            } else {
                b.add(j, i, v.conjugate());
            }
        }
        let mut upper = b.finish(0.0).upper_block_triangle();
        // lower halves of diagonal tiles were never written
        mirror_diagonal_tiles(&mut upper);
        Self { upper }
    }

    /// Hermitian matrix defined by the upper triangle of `g`.
    pub fn from_upper(g: &GeneralMatrix<T>) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::NotSquare {
                rows: g.rows(),
                cols: g.cols(),
            });
        }
        let mut upper = g.upper_block_triangle();
        mirror_diagonal_tiles(&mut upper);
        let th = upper.drop_threshold();
        Ok(Self {
            upper: upper.with_drop_threshold(th)?,
        })
    }

    pub fn from_row_major(n: usize, data: &[T]) -> Result<Self> {
        Self::from_upper(&GeneralMatrix::from_row_major(n, n, data))
    }

    pub fn n(&self) -> usize {
        self.upper.rows()
    }

    pub fn drop_threshold(&self) -> f64 {
        self.upper.drop_threshold()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if i <= j {
            self.upper.get(i, j)
        } else {
            self.upper.get(j, i).conjugate()
        }
    }

    /// Stored entries `(i, j, v)` with `i <= j`.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.upper.iter().filter(|&(i, j, _)| i <= j)
    }

    /// Number of stored (upper-triangle) nonzero entries.
    pub fn nnz_upper(&self) -> usize {
        self.iter_upper().count()
    }

    /// Number of logical nonzero entries of the full matrix.
    pub fn nnz(&self) -> usize {
        self.iter_upper().map(|(i, j, _)| if i == j { 1 } else { 2 }).sum()
    }

    /// Full matrix with both triangles materialized.
    pub fn to_general(&self) -> GeneralMatrix<T> {
        let n = self.n();
        let mut b = TileBuilder::new(n, n);
        b.add_shifted(&self.upper, 0, 0);
        let mut strict = self.upper.clone();
        for (bi, row) in strict.brows.iter_mut().enumerate() {
            if let Ok(p) = row.cols.binary_search(&bi) {
                row.cols.remove(p);
                row.tiles.remove(p);
            }
        }
        b.add_shifted(&strict.adjoint(), 0, 0);
        b.finish(self.drop_threshold())
    }

    pub fn truncate(&self, threshold: f64) -> Result<Self> {
        Ok(Self {
            upper: self.upper.truncate(threshold)?,
        })
    }

    pub fn with_drop_threshold(self, threshold: f64) -> Result<Self> {
        Ok(Self {
            upper: self.upper.with_drop_threshold(threshold)?,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            upper: self.upper.scale(T::from_real(s)),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.iter_upper()
            .map(|(i, j, v)| if i == j { v.modulus_squared() } else { 2.0 * v.modulus_squared() })
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.upper.max_magnitude()
    }

    /// `a + s·b`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        Ok(Self {
            upper: crate::matrix::add_scaled(&self.upper, &other.upper, T::from_real(s))?,
        })
    }

    /// Principal submatrix over a contiguous index range.
    pub fn principal(&self, range: std::ops::Range<usize>) -> Self {
        Self::from_upper(&self.upper.submatrix(range.clone(), range)).expect("square by construction")
    }

    /// Symmetric permutation: entry `(i, j)` moves to `(pos[i], pos[j])`.
    pub fn permute(&self, pos: &[usize]) -> Self {
        assert_eq!(pos.len(), self.n());
        let mut out = Self::from_triplets(self.n(), self.iter_upper().map(|(i, j, v)| (pos[i], pos[j], v)));
        out.upper.set_drop_threshold_unchecked(self.drop_threshold());
        out
    }

    pub(crate) fn upper_storage(&self) -> &GeneralMatrix<T> {
        &self.upper
    }
}

/// `a · b` for a product known to be Hermitian; only the upper block
/// triangle is computed and the lower one is mirrored from it.
pub fn multiply_hermitian<T: Scalar>(a: &GeneralMatrix<T>, b: &GeneralMatrix<T>, threshold: f64) -> Result<HermMatrix<T>> {
    let upper = multiply_upper_blocks(a, b, threshold)?;
    HermMatrix::from_upper(&upper)
}
