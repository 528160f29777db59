//! Coordinate bisection of a 2D lattice: level sizes, the first split and
//! distance-to-cut statistics.
//!
//! ```text
//! cargo run --release --example partition_geometry [side]
//! ```

use locinv::geometry::{build_partition, cut_distance};
use locinv::systems::{build_lattice, LatticeSpec};

fn main() -> locinv::Result<()> {
    let side: usize = std::env::args().nth(1).map_or(16, |s| s.parse().expect("side"));
    let sys = build_lattice(&LatticeSpec::cube(2, side, 1.0, 0.05))?;
    let tree = build_partition(&sys.geometry, 1)?;
    println!("n = {}, levels = {}, diameter = {:.2}", tree.n(), tree.levels(), sys.geometry.diameter());
    for level in 0..tree.levels() {
        let sizes: Vec<usize> = tree.nodes().iter().filter(|n| n.level == level).map(|n| n.len()).collect();
        println!(
            "level {level:2}: {:5} nodes, sizes {}..={}",
            sizes.len(),
            sizes.iter().min().unwrap(),
            sizes.iter().max().unwrap()
        );
    }
    let (a, c) = tree.split(0).expect("root splits");
    let cut = cut_distance(&sys.geometry, a, c)?;
    let touching = cut.values.iter().filter(|&&(_, d)| d <= 1.0).count();
    println!(
        "root split {} | {}, max distance to cut {:.1}, {} indices adjacent to the cut",
        a.len(),
        c.len(),
        cut.max(),
        touching
    );
    Ok(())
}
