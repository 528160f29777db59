//! Refinement building blocks: coefficient tables, iteration bounds, a
//! small regular and localized run, and the sign-function identity for a
//! random congruence `Q`.
//!
//! ```text
//! cargo run --release --example refinement_basics
//! ```

use locinv::matrix::dense::{dense_sign_oracle, herm_from_dense, to_dense};
use locinv::refine::{coefficients, iter_refine, iteration_bound, local_refine, RefineOptions, StopRule};
use locinv::{GeneralMatrix, HermMatrix, NormKind};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> locinv::Result<()> {
    for m in 1..=4 {
        let c = coefficients(m)?;
        let bound = iteration_bound(0.5, 1e-10, m)?;
        println!("m={m}: b = {:?}, c = {:?}, iterations from 0.5 to 1e-10: {bound}", c.polynomial(), c.reduction());
    }

    let s = HermMatrix::from_row_major(2, &[1.0, 0.25, 0.25, 1.0])?;
    let opts = RefineOptions {
        norm: NormKind::Spectral,
        ..Default::default()
    };
    let (z, trace) = iter_refine(&s, &GeneralMatrix::identity(2), &opts)?;
    println!("regular from I: Z = {:?}, norms {:?}", z.to_row_major(), trace.delta_norms);

    let delta0 = GeneralMatrix::from_row_major(2, 2, &[0.0, -0.25, -0.25, 0.0]);
    let (z, trace) = local_refine(&s, &GeneralMatrix::identity(2), &delta0, &opts)?;
    println!("localized from I: Z = {:?}, norms {:?}", z.to_row_major(), trace.delta_norms);

    // Z = Q (Q*SQ)^{-1/2} is reached by refinement started at a scaled Q.
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let s = herm_from_dense(&(&a * a.transpose() + DMatrix::identity(n, n)));
    let q = DMatrix::from_fn(n, n, |i, j| f64::from(i == j) + 0.2 * rng.gen_range(-1.0..1.0));
    let qsq = q.transpose() * locinv::matrix::dense::herm_to_dense(&s) * &q;
    let lmax = qsq.symmetric_eigenvalues().max();
    let q = locinv::matrix::dense::from_dense(&(q / lmax.sqrt()));
    let opts = RefineOptions {
        stop: StopRule::Threshold(1e-13),
        ..Default::default()
    };
    let (z, trace) = iter_refine(&s, &q, &opts)?;
    let oracle = dense_sign_oracle(&s, &q)?;
    let diff = (to_dense(&z) - to_dense(&oracle.z)).norm();
    println!("sign oracle: {} iterations, |Z - Q(Q*SQ)^(-1/2)|_F = {diff:.2e}", trace.iterations);
    Ok(())
}
