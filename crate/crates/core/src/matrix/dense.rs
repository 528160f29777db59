//! Dense eigendecomposition oracles.
//!
//! These routines materialize their arguments as dense `nalgebra` matrices
//! and are intended for leaves, desk-scale reference computations and
//! tests, not for the large sparse products of the factorization drivers.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::{GeneralMatrix, HermMatrix};
use crate::scalar::Scalar;

pub fn to_dense<T: Scalar>(g: &GeneralMatrix<T>) -> DMatrix<T> {
    let mut m = DMatrix::zeros(g.rows(), g.cols());
    for (i, j, v) in g.iter() {
        m[(i, j)] = v;
    }
    m
}

pub fn herm_to_dense<T: Scalar>(h: &HermMatrix<T>) -> DMatrix<T> {
    let mut m = DMatrix::zeros(h.n(), h.n());
    for (i, j, v) in h.iter_upper() {
        m[(i, j)] = v;
        m[(j, i)] = v.conjugate();
    }
    m
}

pub fn from_dense<T: Scalar>(m: &DMatrix<T>) -> GeneralMatrix<T> {
    let (r, c) = m.shape();
    GeneralMatrix::from_triplets(
        r,
        c,
        (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).map(|(i, j)| (i, j, m[(i, j)])),
    )
}

pub fn herm_from_dense<T: Scalar>(m: &DMatrix<T>) -> HermMatrix<T> {
    let n = m.nrows();
    HermMatrix::from_triplets(n, (0..n).flat_map(|i| (i..n).map(move |j| (i, j, m[(i, j)]))))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn eigenvalues<T: Scalar>(h: &HermMatrix<T>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(herm_to_dense(h)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `V f(Λ) V*` for a Hermitian matrix; `f` sees each eigenvalue.
fn hermitian_function<T: Scalar>(m: DMatrix<T>, f: impl Fn(f64) -> Result<f64>) -> Result<DMatrix<T>> {
    let eig = SymmetricEigen::new(m);
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let fk = T::from_real(f(lambda)?);
        scaled.column_mut(k).iter_mut().for_each(|x| *x *= fk);
    }
    Ok(&scaled * v.adjoint())
}

fn inv_sqrt_checked(lambda: f64) -> Result<f64> {
    if lambda <= 0.0 {
        Err(Error::NotPositiveDefinite(lambda))
    } else {
        Ok(1.0 / lambda.sqrt())
    }
}

/// `S^{-1/2}` from the full eigendecomposition.
pub fn dense_inverse_sqrt<T: Scalar>(s: &HermMatrix<T>) -> Result<HermMatrix<T>> {
    let r = hermitian_function(herm_to_dense(s), inv_sqrt_checked)?;
    Ok(herm_from_dense(&r))
}

/// Inverse of the upper Cholesky factor `R` of `S = R* R`, so that `Z Z* = S⁻¹`
/// and `Z* S Z = I`.
pub fn inverse_cholesky<T: Scalar>(s: &HermMatrix<T>) -> Result<GeneralMatrix<T>> {
    let d = herm_to_dense(s);
    let chol = Cholesky::new(d).ok_or_else(|| Error::NotPositiveDefinite(eigenvalues(s)[0]))?;
    // S = L L*, R = L*, Z = R^{-1} = (L^{-1})*
    let n = s.n();
    let linv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::Singular)?;
    Ok(from_dense(&linv.adjoint()))
}

/// Result of the dense sign-function oracle.
#[derive(Clone, Debug)]
pub struct SignOracle<T: Scalar = f64> {
    /// `sign([[0, Q*S], [Q, 0]])`, a 2n×2n matrix.
    pub sign: GeneralMatrix<T>,
    /// `Q (Q*SQ)^{-1/2}`.
    pub z: GeneralMatrix<T>,
}

/// Dense evaluation of `sign(X)` for `X = [[0, Q*S], [Q, 0]]`.
///
/// Uses `sign(X) = X (X²)^{-1/2}` with `X² = diag(Q*SQ, QQ*S)`. The lower
/// left block `Q (Q*SQ)^{-1/2}` is the inverse factor; the upper right
/// block `Q*S (QQ*S)^{-1/2}` is evaluated independently through the
/// similarity `QQ*S = W^{1/2} (W^{1/2} S W^{1/2}) W^{-1/2}`, `W = QQ*`.
pub fn dense_sign_oracle<T: Scalar>(s: &HermMatrix<T>, q: &GeneralMatrix<T>) -> Result<SignOracle<T>> {
    let n = s.n();
    if q.rows() != n || q.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "S is {n}x{n} but Q is {}x{}",
            q.rows(),
            q.cols()
        )));
    }
    let sd = herm_to_dense(s);
    if SymmetricEigen::new(sd.clone()).eigenvalues.iter().any(|&l| l <= 0.0) {
        let lmin = eigenvalues(s)[0];
        return Err(Error::NotPositiveDefinite(lmin));
    }
    let qd = to_dense(q);
    let svals = qd.clone().singular_values();
    let smax = svals.max();
    if svals.min() <= smax * n as f64 * f64::EPSILON || smax == 0.0 {
        return Err(Error::Singular);
    }

    let qsq = qd.adjoint() * &sd * &qd;
    let qsq = (&qsq + qsq.adjoint()).unscale(2.0);
    let z = &qd * hermitian_function(qsq, inv_sqrt_checked)?;

    let w = &qd * qd.adjoint();
    let w = (&w + w.adjoint()).unscale(2.0);
    let w_half = hermitian_function(w.clone(), |l| Ok(l.max(0.0).sqrt()))?;
    let w_inv_half = hermitian_function(w, inv_sqrt_checked)?;
    let inner = &w_half * &sd * &w_half;
    let inner = (&inner + inner.adjoint()).unscale(2.0);
    let qqs_inv_half = &w_half * hermitian_function(inner, inv_sqrt_checked)? * &w_inv_half;
    let upper = qd.adjoint() * &sd * qqs_inv_half;

    let mut sign = DMatrix::zeros(2 * n, 2 * n);
    sign.view_mut((0, n), (n, n)).copy_from(&upper);
    sign.view_mut((n, 0), (n, n)).copy_from(&z);
    Ok(SignOracle {
        sign: from_dense(&sign),
        z: from_dense(&z),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_sqrt_of_diagonal() {
        let s = HermMatrix::from_triplets(2, [(0, 0, 4.0), (1, 1, 9.0)]);
        let r = dense_inverse_sqrt(&s).unwrap();
        assert!((r.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((r.get(1, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.get(0, 1).abs() < 1e-15);
        let i = dense_inverse_sqrt(&HermMatrix::<f64>::identity(3)).unwrap();
        for k in 0..3 {
            assert!((i.get(k, k) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let s = HermMatrix::from_triplets(2, [(0, 0, 1.0), (1, 1, 1.0), (0, 1, 2.0)]);
        assert!(matches!(dense_inverse_sqrt(&s), Err(Error::NotPositiveDefinite(_))));
        assert!(matches!(inverse_cholesky(&s), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn scalar_sign_oracle() {
        let s = HermMatrix::from_triplets(1, [(0, 0, 4.0)]);
        let q = GeneralMatrix::identity(1);
        let o = dense_sign_oracle(&s, &q).unwrap();
        assert!((o.z.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((o.sign.get(0, 1) - 2.0).abs() < 1e-14);
        assert!((o.sign.get(1, 0) - 0.5).abs() < 1e-15);
        assert_eq!(o.sign.get(0, 0), 0.0);
    }

    #[test]
    fn sign_oracle_identity() {
        let o = dense_sign_oracle(&HermMatrix::<f64>::identity(3), &GeneralMatrix::identity(3)).unwrap();
        for i in 0..3 {
            assert!((o.z.get(i, i) - 1.0).abs() < 1e-14);
            assert!((o.sign.get(i, i + 3) - 1.0).abs() < 1e-14);
            assert!((o.sign.get(i + 3, i) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_q_rejected() {
        let q = GeneralMatrix::from_row_major(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            dense_sign_oracle(&HermMatrix::identity(2), &q),
            Err(Error::Singular)
        ));
    }

    #[test]
    fn inverse_cholesky_residual() {
        let s = HermMatrix::from_row_major(3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]).unwrap();
        let z = inverse_cholesky(&s).unwrap();
        let zd = to_dense(&z);
        let r = zd.adjoint() * herm_to_dense(&s) * &zd - DMatrix::identity(3, 3);
        assert!(r.norm() < 1e-14);
        // upper triangular
        assert_eq!(z.get(2, 0), 0.0);
    }
}
