//! Scalar field abstraction for real symmetric and complex Hermitian matrices.

use nalgebra::ComplexField;
use num_complex::Complex64;

/// Element type of every matrix in the crate.
///
/// Implemented for `f64` (the default used by all experiment drivers) and
/// `Complex64`. The dense tile product is dispatched to `matrixmultiply`.
pub trait Scalar:
    ComplexField<RealField = f64> + Copy + Default + Send + Sync + std::fmt::Debug + 'static
{
    /// `c += a * b` for row-major tiles `a` (m×k), `b` (k×n), `c` (m×n).
    fn gemm_acc(m: usize, k: usize, n: usize, a: &[Self], b: &[Self], c: &mut [Self]);

    #[inline]
    fn magnitude(self) -> f64 {
        self.modulus()
    }

    #[inline]
    fn is_exact_zero(self) -> bool {
        self == Self::zero()
    }
}

impl Scalar for f64 {
    fn gemm_acc(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
        debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
        // SAFETY: slice lengths checked above; strides describe dense row-major tiles.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                k as isize,
                1,
                b.as_ptr(),
                n as isize,
                1,
                1.0,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }

    #[inline]
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn gemm_acc(m: usize, k: usize, n: usize, a: &[Self], b: &[Self], c: &mut [Self]) {
        debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
        // SAFETY: Complex64 is repr(C) { re, im }, identical in layout to [f64; 2].
        unsafe {
            matrixmultiply::zgemm(
                matrixmultiply::CGemmOption::Standard,
                matrixmultiply::CGemmOption::Standard,
                m,
                k,
                n,
                [1.0, 0.0],
                a.as_ptr() as *const [f64; 2],
                k as isize,
                1,
                b.as_ptr() as *const [f64; 2],
                n as isize,
                1,
                [1.0, 0.0],
                c.as_mut_ptr() as *mut [f64; 2],
                n as isize,
                1,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_tile_product() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        let mut c = [1.0; 4];
        f64::gemm_acc(2, 2, 2, &a, &b, &mut c);
        assert_eq!(c, [20.0, 23.0, 44.0, 51.0]);
    }

    #[test]
    fn complex_tile_product() {
        let i = Complex64::new(0.0, 1.0);
        let a = [i];
        let b = [i];
        let mut c = [Complex64::new(0.0, 0.0)];
        Complex64::gemm_acc(1, 1, 1, &a, &b, &mut c);
        assert_eq!(c[0], Complex64::new(-1.0, 0.0));
    }
}
