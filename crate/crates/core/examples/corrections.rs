//! Per-level corrections of a localized factorization: norms, sparsity,
//! the sum identity and how the top-level correction decays away from the
//! root cut.
//!
//! ```text
//! cargo run --release --example corrections [side]
//! ```

use locinv::analysis::{correction_identity_error, count_entries_above, decay_vs_cut};
use locinv::factor::{factorize_geometric, FactorConfig, Method};
use locinv::geometry::cut_distance;
use locinv::systems::{build_lattice, LatticeSpec};

fn main() -> locinv::Result<()> {
    let side: usize = std::env::args().nth(1).map_or(32, |s| s.parse().expect("side"));
    let sys = build_lattice(&LatticeSpec::cube(2, side, 1.0, 0.05))?;
    let cfg = FactorConfig::new(Method::Localized).with_corrections(true);
    let run = factorize_geometric(&sys.matrix, &sys.geometry, &cfg)?;
    let ledger = run.result.corrections.as_ref().expect("captured");
    for (l, k) in ledger.levels.iter().enumerate() {
        println!(
            "K{l:<2} |K|_F = {:.3e}, entries above 1e-6: {:6}",
            k.frobenius_norm(),
            count_entries_above(k, 1e-6)?
        );
    }
    println!("|Z - sum K_l|_F = {:.2e}", correction_identity_error(&run.result)?);

    let (a, c) = run.tree.split(0).expect("root splits");
    let profile = decay_vs_cut(&ledger.levels[0], &cut_distance(&sys.geometry, a, c)?)?;
    for (d, m) in profile.binned_max().into_iter().take(12) {
        println!("distance to cut {d:4.0}: max |K0| {m:.3e}");
    }
    Ok(())
}
