//! Factorize the three benchmark lattices with both methods and report the
//! residual, iteration counts and wall time.
//!
//! ```text
//! cargo run --release --example lattice_factorization [threshold]
//! ```

use std::time::Instant;

use locinv::factor::{factorize_geometric, verify_factorization, FactorConfig, Method};
use locinv::refine::RefineOptions;
use locinv::systems::{build_lattice, LatticeSpec};
use locinv::NormKind;

fn main() -> locinv::Result<()> {
    let threshold: f64 = std::env::args().nth(1).map_or(0.0, |s| s.parse().expect("threshold"));
    for spec in [LatticeSpec::table_1d(), LatticeSpec::table_2d(), LatticeSpec::table_3d()] {
        let sys = build_lattice(&spec)?;
        for method in [Method::Recursive, Method::Localized] {
            let cfg = FactorConfig::new(method).with_refine(RefineOptions {
                threshold,
                ..Default::default()
            });
            let t = Instant::now();
            let run = factorize_geometric(&sys.matrix, &sys.geometry, &cfg)?;
            let secs = t.elapsed().as_secs_f64();
            let z = &run.result.z;
            let res = verify_factorization(&sys.matrix, z, NormKind::Frobenius)? / (sys.n() as f64).sqrt();
            println!(
                "{}D n={:5} {:9?}: residual/sqrt(n) {:.2e}, nnz(Z) {:8}, iterations {:4}, {:.2} s",
                spec.dim,
                sys.n(),
                method,
                res,
                z.nnz(),
                run.result.total_iterations(),
                secs
            );
        }
    }
    Ok(())
}
