#![allow(dead_code)]

use locinv::matrix::dense::{from_dense, herm_from_dense};
use locinv::{GeneralMatrix, HermMatrix};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random orthogonal matrix from the QR factorization of a Gaussian-like
/// matrix, with column signs fixed by the diagonal of R.
pub fn random_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0) + rng.gen_range(-1.0..1.0));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Symmetric positive definite matrix with eigenvalues in `[1, cond]`,
/// both ends attained, the rest log-uniform in between.
pub fn random_pd(rng: &mut impl Rng, n: usize, cond: f64) -> DMatrix<f64> {
    let v = random_orthogonal(rng, n);
    let lambda: Vec<f64> = (0..n)
        .map(|k| match k {
            0 => 1.0,
            1 => cond,
            _ => cond.powf(rng.gen::<f64>()),
        })
        .collect();
    let s = &v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambda)) * v.transpose();
    (&s + s.transpose()) * 0.5
}

/// Matrix with singular values log-uniform in `[lo, hi]`.
pub fn random_congruence(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let u = random_orthogonal(rng, n);
    let v = random_orthogonal(rng, n);
    let sigma = nalgebra::DVector::from_fn(n, |_, _| lo * (hi / lo).powf(rng.gen::<f64>()));
    u * DMatrix::from_diagonal(&sigma) * v.transpose()
}

/// `P S Pᵀ` for a uniformly random permutation, so that contiguous halving
/// yields random balanced cuts.
pub fn random_symmetric_permutation(rng: &mut impl Rng, s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    DMatrix::from_fn(n, n, |i, j| s[(p[i], p[j])])
}

pub fn herm(s: &DMatrix<f64>) -> HermMatrix {
    herm_from_dense(s)
}

pub fn general(a: &DMatrix<f64>) -> GeneralMatrix {
    from_dense(a)
}

pub fn extreme_eigenvalues(s: &DMatrix<f64>) -> (f64, f64) {
    let e = SymmetricEigen::new(s.clone()).eigenvalues;
    (e.min(), e.max())
}

/// Largest eigenvalue magnitude of a symmetric matrix.
pub fn spectral_norm_sym(a: &DMatrix<f64>) -> f64 {
    let a = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(a).eigenvalues.amax()
}

/// Dense inverse of the lower Cholesky factor, transposed: `Z Zᵀ = S⁻¹`.
pub fn dense_inverse_factor(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let l = s.clone().cholesky().expect("positive definite").l();
    l.solve_lower_triangular(&DMatrix::identity(n, n)).expect("nonsingular").transpose()
}

pub type Triplets = Vec<(usize, usize, f64)>;

/// Gaussian overlap `exp(-width d²)` of jittered grid points with spacing
/// 1.5, entries below `1e-12` dropped.
pub fn gaussian_overlap(rng: &mut impl Rng, side: usize, width: f64) -> (Vec<[f64; 3]>, Triplets) {
    let coords: Vec<[f64; 3]> = (0..side * side * side)
        .map(|i| [i % side, (i / side) % side, i / (side * side)].map(|g| 1.5 * g as f64 + rng.gen_range(-0.2..0.2)))
        .collect();
    let reach = (27.63 / width).sqrt();
    let mut entries = Vec::new();
    for i in 0..coords.len() {
        for j in i..coords.len() {
            let d2: f64 = (0..3).map(|k| (coords[i][k] - coords[j][k]).powi(2)).sum();
            if d2.sqrt() < reach {
                let v = (-width * d2).exp();
                if v > 1e-12 {
                    entries.push((i, j, v));
                }
            }
        }
    }
    (coords, entries)
}
