//! Iterate the four refinement variants on the Wilson matrix, starting
//! from its exact inverse square root, and print how drift and
//! factorization error evolve.
//!
//! ```text
//! cargo run --release --example wilson_stability [iterations]
//! ```

use locinv::analysis::{stability_experiment, StabilityVariant};

fn main() -> locinv::Result<()> {
    let iters: usize = std::env::args().nth(1).map_or(100, |s| s.parse().expect("iterations"));
    let report = stability_experiment(iters)?;
    println!("{:>5} {:>13} {:>12} {:>12}", "iter", "variant", "deviation", "facterror");
    for v in StabilityVariant::ALL {
        for row in report.series(v).filter(|r| r.iter % 10 == 0 || r.iter == iters) {
            println!("{:>5} {:>13} {:>12.3e} {:>12.3e}", row.iter, v.name(), row.deviation, row.facterror);
        }
    }
    Ok(())
}
