//! Count the entries of `Z` and of the root correction `K₀` above 1e-6 and
//! 1e-8 along growing lattices and fit each count series against n.
//!
//! ```text
//! cargo run --release --example scaling_ladder [dim]
//! ```

use locinv::analysis::{count_entries_above, ScalingModel, ScalingSeries};
use locinv::factor::{extract_corrections, factorize_geometric, FactorConfig, Method};
use locinv::systems::{build_lattice, LatticeSpec};

fn main() -> locinv::Result<()> {
    let dims: Vec<usize> = match std::env::args().nth(1) {
        Some(d) => vec![d.parse().expect("dimension")],
        None => vec![1, 2, 3],
    };
    for dim in dims {
        let (sides, beta): (Vec<usize>, f64) = match dim {
            1 => ((3..=9).map(|k| 1 << k).collect(), 0.25),
            2 => ((2..=6).map(|k| 1 << k).collect(), 0.05),
            _ => ((1..=4).map(|k| 1 << k).collect(), 0.01),
        };
        let mut z_series = [1e-6, 1e-8].map(|t| ScalingSeries { threshold: t, points: vec![] });
        let mut k_series = z_series.clone();
        for side in sides {
            let sys = build_lattice(&LatticeSpec::cube(dim, side, 1.0, beta))?;
            let cfg = FactorConfig::new(Method::Localized).with_corrections(true);
            let run = factorize_geometric(&sys.matrix, &sys.geometry, &cfg)?.result;
            let k0 = &extract_corrections(&run)?.levels[0];
            for (zs, ks) in z_series.iter_mut().zip(k_series.iter_mut()) {
                zs.points.push((sys.n(), count_entries_above(&run.z, zs.threshold)?));
                ks.points.push((sys.n(), count_entries_above(k0, ks.threshold)?));
            }
        }
        for (label, series) in [("Z", &z_series), ("K0", &k_series)] {
            for s in series.iter() {
                println!("{dim}D {label} above {:e}: {:?}", s.threshold, s.points);
                for model in ScalingModel::ALL {
                    if let Ok(f) = s.fit(model) {
                        println!("    {:>10}: R2 {:.5} rss {:.4e} coef {:?}", model.name(), f.r2, f.rss, f.coefficients);
                    }
                }
            }
        }
    }
    Ok(())
}
