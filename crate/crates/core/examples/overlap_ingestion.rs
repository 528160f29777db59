//! End-to-end run on an externally supplied overlap matrix: a Gaussian
//! overlap of jittered points is written as Matrix Market plus
//! coordinates, read back, factorized and profiled.
//!
//! ```text
//! cargo run --release --example overlap_ingestion [points-per-axis] [out-dir]
//! ```

use std::path::PathBuf;

use locinv::analysis::decay_vs_distance;
use locinv::factor::{factorize_geometric, verify_factorization, FactorConfig, Method};
use locinv::geometry::IndexGeometry;
use locinv::systems::{load_overlap, OverlapDataset};
use locinv::{HermMatrix, NormKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> locinv::Result<()> {
    let mut args = std::env::args().skip(1);
    let side: usize = args.next().map_or(8, |s| s.parse().expect("points per axis"));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/overlap".into()));
    std::fs::create_dir_all(&out)?;

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let coords: Vec<[f64; 3]> = (0..side * side * side)
        .map(|i| {
            let grid = [i % side, (i / side) % side, i / (side * side)];
            grid.map(|g| 1.5 * g as f64 + rng.gen_range(-0.2..0.2))
        })
        .collect();
    let geometry = IndexGeometry::new(coords, 3)?;
    let n = geometry.n();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i..n {
            let v = (-geometry.distance(i, j).powi(2) / 2.0).exp();
            if v > 1e-12 {
                entries.push((i, j, v));
            }
        }
    }
    let (mpath, cpath) = (out.join("overlap.mtx"), out.join("overlap.xyz"));
    OverlapDataset::new(HermMatrix::from_triplets(n, entries), geometry)?.save(&mpath, &cpath)?;

    let sys = load_overlap(&mpath, &cpath)?;
    let run = factorize_geometric(&sys.matrix, &sys.geometry, &FactorConfig::new(Method::Localized))?;
    let res = verify_factorization(&sys.matrix, &run.result.z, NormKind::Frobenius)?;
    let profile = decay_vs_distance(&run.result.z, &sys.geometry)?;
    profile.write_csv(&out.join("z_distance.csv"))?;
    let fit = profile.envelope_fit(0.0, f64::INFINITY)?;
    println!(
        "n = {n}, nnz(S) = {}, residual {res:.2e}, iterations {}, envelope slope {:.2} (R2 {:.3})",
        sys.matrix.nnz(),
        run.result.total_iterations(),
        fit.slope,
        fit.r2
    );
    Ok(())
}
