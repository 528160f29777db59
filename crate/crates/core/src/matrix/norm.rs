use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{GeneralMatrix, HermMatrix};
use crate::scalar::Scalar;

/// Matrix norm used for error measurement and stopping decisions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Spectral,
    Frobenius,
}

/// Relative tolerance of the Lanczos spectral-norm estimate.
pub const SPECTRAL_TOL: f64 = 1e-4;
/// Iteration cap of the Lanczos spectral-norm estimate.
pub const LANCZOS_MAX_ITER: usize = 200;

const LANCZOS_SEED: u64 = 0x5eed_1a2c;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (a, b)| acc + a.conjugate() * *b)
}

fn norm2<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.modulus_squared()).sum::<f64>().sqrt()
}

/// Largest-magnitude eigenvalue of a Hermitian operator by Lanczos with
/// full reorthogonalization.
///
/// Converged when the Ritz residual bound `β_k |s_k|` is at most
/// `tol · |θ|`, which bounds the relative error of `θ`.
pub fn lanczos_extreme<T: Scalar>(
    n: usize,
    mut apply: impl FnMut(&[T], &mut [T]),
    tol: f64,
    max_iter: usize,
) -> SpectralEstimate {
    if n == 0 {
        return SpectralEstimate {
            value: 0.0,
            converged: true,
            iterations: 0,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let mut q: Vec<T> = (0..n).map(|_| T::from_real(rng.gen_range(-1.0..1.0))).collect();
    let s = norm2(&q);
    q.iter_mut().for_each(|v| *v = v.unscale(s));

    let mut basis: Vec<Vec<T>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![T::zero(); n];
    let mut best = SpectralEstimate {
        value: 0.0,
        converged: false,
        iterations: 0,
    };
    let cap = max_iter.min(n);
    for _ in 0..cap {
        apply(&q, &mut w);
        let a = dot(&q, &w).real();
        for (wi, qi) in w.iter_mut().zip(&q) {
            *wi -= qi.scale(a);
        }
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            for (wi, pi) in w.iter_mut().zip(prev as &Vec<T>) {
                *wi -= pi.scale(b);
            }
        }
        basis.push(q.clone());
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= *vi * c;
                }
            }
        }
        alpha.push(a);
        let b = norm2(&w);
        let m = alpha.len();
        let check = m <= 40 || m.is_multiple_of(8) || m == cap;
        let scale = alpha.iter().chain(&beta).fold(0.0f64, |acc, x| acc.max(x.abs()));
        let breakdown = b <= 1e-14 * scale.max(f64::MIN_POSITIVE);
        if check || breakdown {
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (idx, theta) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (i, &v)| if v.abs() > acc.1.abs() { (i, v) } else { acc });
            let resid = b * eig.eigenvectors[(m - 1, idx)].abs();
            best = SpectralEstimate {
                value: theta.abs(),
                converged: breakdown || m == n || resid <= tol * theta.abs(),
                iterations: m,
            };
            if best.converged {
                return best;
            }
        }
        beta.push(b);
        q = w.iter().map(|v| v.unscale(b)).collect();
    }
    best
}

impl<T: Scalar> HermMatrix<T> {
    /// Lanczos estimate of the spectral norm (largest |eigenvalue|).
    pub fn spectral_estimate(&self, tol: f64) -> SpectralEstimate {
        let g = self.to_general();
        lanczos_extreme(self.n(), |x, y| g.matvec(x, y), tol, LANCZOS_MAX_ITER)
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Frobenius => self.frobenius_norm(),
            NormKind::Spectral => self.spectral_estimate(SPECTRAL_TOL).value,
        }
    }
}

impl<T: Scalar> GeneralMatrix<T> {
    /// Largest singular value, by Lanczos on `A* A`. For Hermitian input this
    /// is the largest |eigenvalue|.
    pub fn spectral_estimate(&self, tol: f64) -> SpectralEstimate {
        let adj = self.adjoint();
        let mut tmp = vec![T::zero(); self.rows()];
        let est = lanczos_extreme(
            self.cols(),
            |x, y| {
                self.matvec(x, &mut tmp);
                adj.matvec(&tmp, y);
            },
            tol,
            LANCZOS_MAX_ITER,
        );
        SpectralEstimate {
            value: est.value.sqrt(),
            ..est
        }
    }
}

/// Norm of a square matrix. Spectral norms are Lanczos estimates with
/// relative tolerance `tol`.
pub fn norm<T: Scalar>(a: &GeneralMatrix<T>, kind: NormKind, tol: f64) -> Result<f64> {
    match kind {
        NormKind::Frobenius => Ok(a.frobenius_norm()),
        NormKind::Spectral => {
            if !a.is_square() {
                return Err(Error::NotSquare {
                    rows: a.rows(),
                    cols: a.cols(),
                });
            }
            Ok(a.spectral_estimate(tol).value)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_off_diagonal() {
        let b = -0.3;
        let h = HermMatrix::from_triplets(2, [(0, 1, -b)]);
        assert!((h.norm(NormKind::Spectral) - b.abs()).abs() < 1e-12);
        assert!((h.norm(NormKind::Frobenius) - 2f64.sqrt() * b.abs()).abs() < 1e-15);
        let g = h.to_general();
        assert!((norm(&g, NormKind::Spectral, 1e-4).unwrap() - b.abs()).abs() < 1e-12);
    }

    #[test]
    fn identity_frobenius() {
        for n in [1, 7, 130] {
            let i = GeneralMatrix::<f64>::identity(n);
            assert!((norm(&i, NormKind::Frobenius, 0.0).unwrap() - (n as f64).sqrt()).abs() < 1e-13);
        }
    }

    #[test]
    fn spectral_rejects_rectangular() {
        let a = GeneralMatrix::<f64>::zeros(2, 3);
        assert!(matches!(norm(&a, NormKind::Spectral, 1e-4), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn zero_matrix() {
        let z = HermMatrix::<f64>::zeros(5);
        let e = z.spectral_estimate(1e-4);
        assert_eq!(e.value, 0.0);
        assert!(e.converged);
    }

    #[test]
    fn large_diagonal_with_known_extreme() {
        let n = 500;
        let h = HermMatrix::from_triplets(n, (0..n).map(|i| (i, i, if i == 321 { -3.0 } else { (i as f64) / n as f64 })));
        let e = h.spectral_estimate(1e-4);
        assert!(e.converged);
        assert!((e.value - 3.0).abs() <= 3e-4);
    }
}
