//! Benchmark systems: nearest-neighbour lattices, the Wilson matrix and
//! externally generated overlap matrices with basis-function centers.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::IndexGeometry;
use crate::matrix::market::{read_matrix_market, save_symmetric, MarketMatrix};
use crate::matrix::HermMatrix;

/// An open-boundary integer lattice with `α` on the diagonal and `β`
/// between nearest neighbours.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dim: usize,
    pub extents: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
}

impl LatticeSpec {
    /// A `dim`-dimensional cube with `side` vertices per axis.
    pub fn cube(dim: usize, side: usize, alpha: f64, beta: f64) -> Self {
        Self {
            dim,
            extents: vec![side; dim],
            alpha,
            beta,
        }
    }

    /// 1D, n = 512, α = 1, β = 0.25.
    pub fn table_1d() -> Self {
        Self::cube(1, 512, 1.0, 0.25)
    }

    /// 2D, 64×64, α = 1, β = 0.05.
    pub fn table_2d() -> Self {
        Self::cube(2, 64, 1.0, 0.05)
    }

    /// 3D, 16×16×16, α = 1, β = 0.01.
    pub fn table_3d() -> Self {
        Self::cube(3, 16, 1.0, 0.01)
    }

    pub fn n(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidArgument(format!("lattice dimension {} not in 1..=3", self.dim)));
        }
        if self.extents.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "{} extents given for a {}-dimensional lattice",
                self.extents.len(),
                self.dim
            )));
        }
        if self.extents.contains(&0) {
            return Err(Error::InvalidArgument("lattice extents must be positive".into()));
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Smallest eigenvalue of the lattice matrix.
    ///
    /// The matrix is `α I + β Σ_d A_d` with `A_d` the path adjacency along
    /// axis `d`, whose extreme eigenvalues are `±2 cos(π/(n_d+1))`.
    pub fn min_eigenvalue(&self) -> f64 {
        let spread: f64 = self.extents.iter().map(|&e| 2.0 * (PI / (e as f64 + 1.0)).cos()).sum();
        self.alpha - self.beta.abs() * spread
    }
}

/// A Hermitian positive definite matrix with one point per index.
#[derive(Clone, Debug)]
pub struct OverlapDataset {
    pub matrix: HermMatrix,
    pub geometry: IndexGeometry,
}

impl OverlapDataset {
    pub fn new(matrix: HermMatrix, geometry: IndexGeometry) -> Result<Self> {
        if matrix.n() != geometry.n() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} indices, coordinates have {}",
                matrix.n(),
                geometry.n()
            )));
        }
        Ok(Self { matrix, geometry })
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn save(&self, matrix_path: &Path, coords_path: &Path) -> Result<()> {
        save_symmetric(matrix_path, &self.matrix)?;
        self.geometry.write(coords_path)
    }
}

/// Build a lattice system; vertex `(x, y, z)` has index `x + n_x (y + n_y z)`.
pub fn build_lattice(spec: &LatticeSpec) -> Result<OverlapDataset> {
    spec.validate()?;
    let lmin = spec.min_eigenvalue();
    if lmin <= 0.0 {
        return Err(Error::NotPositiveDefinite(lmin));
    }
    let mut ext = [1usize; 3];
    ext[..spec.dim].copy_from_slice(&spec.extents);
    let n = spec.n();
    let index = |x: usize, y: usize, z: usize| x + ext[0] * (y + ext[1] * z);
    let mut coords = Vec::with_capacity(n);
    let mut entries = Vec::with_capacity(n * (spec.dim + 1));
    for z in 0..ext[2] {
        for y in 0..ext[1] {
            for x in 0..ext[0] {
                let i = index(x, y, z);
                coords.push([x as f64, y as f64, z as f64]);
                entries.push((i, i, spec.alpha));
                if spec.beta != 0.0 {
                    if x + 1 < ext[0] {
                        entries.push((i, index(x + 1, y, z), spec.beta));
                    }
                    if y + 1 < ext[1] {
                        entries.push((i, index(x, y + 1, z), spec.beta));
                    }
                    if z + 1 < ext[2] {
                        entries.push((i, index(x, y, z + 1), spec.beta));
                    }
                }
            }
        }
    }
    OverlapDataset::new(HermMatrix::from_triplets(n, entries), IndexGeometry::new(coords, spec.dim)?)
}

/// The 4×4 Wilson matrix.
pub fn wilson_matrix() -> HermMatrix {
    HermMatrix::from_row_major(
        4,
        &[
            10.0, 7.0, 8.0, 7.0, //
            7.0, 5.0, 6.0, 5.0, //
            8.0, 6.0, 10.0, 9.0, //
            7.0, 5.0, 9.0, 10.0,
        ],
    )
    .expect("square")
}

/// Load a symmetric Matrix Market file and a coordinate file.
pub fn load_overlap(matrix_path: &Path, coords_path: &Path) -> Result<OverlapDataset> {
    let matrix = match read_matrix_market(matrix_path)? {
        MarketMatrix::Symmetric(h) => h,
        MarketMatrix::General(_) => {
            return Err(Error::Parse {
                path: matrix_path.to_path_buf(),
                line: 1,
                msg: "overlap matrix must have a symmetric header".into(),
            })
        }
    };
    OverlapDataset::new(matrix, IndexGeometry::read(coords_path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::dense::eigenvalues;
    use std::fs;

    #[test]
    fn tridiagonal_line() {
        let d = build_lattice(&LatticeSpec::cube(1, 3, 1.0, 0.25)).unwrap();
        assert_eq!(
            d.matrix.to_general().to_row_major(),
            vec![1.0, 0.25, 0.0, 0.25, 1.0, 0.25, 0.0, 0.25, 1.0]
        );
        assert_eq!(d.geometry.coord(2), [2.0, 0.0, 0.0]);
    }

    #[test]
    fn small_square_has_no_diagonal_coupling() {
        let d = build_lattice(&LatticeSpec::cube(2, 2, 1.0, 0.05)).unwrap();
        let off: Vec<_> = d.matrix.iter_upper().filter(|&(i, j, _)| i != j).collect();
        assert_eq!(off, vec![(0, 1, 0.05), (0, 2, 0.05), (1, 3, 0.05), (2, 3, 0.05)]);
        assert_eq!(d.matrix.get(0, 3), 0.0);
        assert_eq!(d.matrix.get(1, 2), 0.0);
    }

    #[test]
    fn zero_coupling_is_scaled_identity() {
        let d = build_lattice(&LatticeSpec::cube(3, 3, 2.5, 0.0)).unwrap();
        assert_eq!(d.matrix.nnz(), 27);
        assert!((0..27).all(|i| d.matrix.get(i, i) == 2.5));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            build_lattice(&LatticeSpec::cube(1, 10, 1.0, 0.6)),
            Err(Error::NotPositiveDefinite(_))
        ));
        assert!(build_lattice(&LatticeSpec::cube(4, 2, 1.0, 0.0)).is_err());
        assert!(build_lattice(&LatticeSpec::cube(2, 0, 1.0, 0.0)).is_err());
        let mut s = LatticeSpec::cube(2, 3, 1.0, 0.1);
        s.extents.pop();
        assert!(build_lattice(&s).is_err());
    }

    #[test]
    fn min_eigenvalue_matches_dense() {
        for spec in [
            LatticeSpec::cube(1, 9, 1.0, 0.25),
            LatticeSpec {
                dim: 2,
                extents: vec![5, 3],
                alpha: 1.0,
                beta: -0.2,
            },
            LatticeSpec::cube(3, 4, 1.0, 0.1),
        ] {
            let d = build_lattice(&spec).unwrap();
            assert!((eigenvalues(&d.matrix)[0] - spec.min_eigenvalue()).abs() < 1e-12);
        }
    }

    #[test]
    fn row_counts_are_bounded() {
        for (dim, side, max) in [(1, 20, 3), (2, 7, 5), (3, 5, 7)] {
            let d = build_lattice(&LatticeSpec::cube(dim, side, 1.0, 0.01)).unwrap();
            let g = d.matrix.to_general();
            let mut per_row = vec![0; d.n()];
            g.iter().for_each(|(i, _, _)| per_row[i] += 1);
            assert_eq!(per_row.iter().max(), Some(&max));
        }
    }

    #[test]
    fn wilson_entries() {
        let w = wilson_matrix();
        assert_eq!(w.get(0, 0), 10.0);
        assert_eq!(w.get(2, 3), 9.0);
        assert_eq!(w.to_general(), w.to_general().adjoint());
    }

    #[test]
    fn overlap_files() {
        let dir = tempfile::tempdir().unwrap();
        let (m, c) = (dir.path().join("s.mtx"), dir.path().join("s.xyz"));
        fs::write(&m, "%%MatrixMarket matrix coordinate real symmetric\n1 1 1\n1 1 1.0\n").unwrap();
        fs::write(&c, "0 0 0\n").unwrap();
        let d = load_overlap(&m, &c).unwrap();
        assert_eq!(d.n(), 1);
        fs::write(&c, "0 0 0\n1 0 0\n").unwrap();
        assert!(matches!(load_overlap(&m, &c), Err(Error::DimensionMismatch(_))));
        fs::write(&m, "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1.0\n").unwrap();
        assert!(load_overlap(&m, &c).is_err());
    }

    #[test]
    fn save_load_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let (m, c) = (dir.path().join("s.mtx"), dir.path().join("s.xyz"));
        let n = 30;
        let coords: Vec<[f64; 3]> = (0..n).map(|i| [(i as f64).sqrt(), 1.0 / (i as f64 + 3.0), -0.1 * i as f64]).collect();
        let matrix = HermMatrix::from_triplets(
            n,
            (0..n).map(|i| (i, i, 1.0 + (i as f64).ln_1p())).chain((1..n).map(|i| (i - 1, i, 0.1 / 3.0 * i as f64))),
        );
        let d = OverlapDataset::new(matrix, IndexGeometry::new(coords, 3).unwrap()).unwrap();
        d.save(&m, &c).unwrap();
        let back = load_overlap(&m, &c).unwrap();
        assert_eq!(back.matrix, d.matrix);
        assert_eq!(back.geometry, d.geometry);
    }
}
