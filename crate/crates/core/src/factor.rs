//! Recursive and localized inverse factorization over a partition tree.
//!
//! At every internal node the index set splits as `S = [[A, B], [B*, C]]`.
//! The children are factorized independently, `Z₀ = diag(Z_A, Z_C)`, and
//! the result is refined until `Z* S Z ≈ I`:
//!
//! - [`Method::Recursive`] recomputes `δ = I − Z* S Z` every iteration.
//! - [`Method::Localized`] starts from `δ₀ = −[[0, Z_A* B Z_C], [(..)*, 0]]`
//!   and updates `δ` through the corrections only.
//!
//! The matrix is expected in tree order, where every node covers a
//! contiguous range of positions; [`factorize_geometric`] handles the
//! permutation to and from the original order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_partition, permute_symmetric, IndexGeometry, PartitionTree};
use crate::matrix::dense::inverse_cholesky;
use crate::matrix::{add_scaled, multiply, GeneralMatrix, HermMatrix, NormKind, TileBuilder};
use crate::refine::{factorization_error, local_refine, iter_refine, RefineOptions, RefineTrace, StopCause};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Recursive,
    Localized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafSolver {
    /// `1/√s` for 1×1 leaves.
    ScalarRsqrt,
    /// Inverse of the upper Cholesky factor.
    DenseInverseCholesky,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorConfig {
    pub method: Method,
    pub refine: RefineOptions,
    pub leaf_size: usize,
    pub leaf_solver: LeafSolver,
    /// Keep the per-level corrections `K_l`.
    pub capture_corrections: bool,
}

impl FactorConfig {
    /// Single-element leaves, default refinement, no capture.
    pub fn new(method: Method) -> Self {
        Self {
            method,
            refine: RefineOptions::default(),
            leaf_size: 1,
            leaf_solver: LeafSolver::ScalarRsqrt,
            capture_corrections: false,
        }
    }

    /// Set the leaf size; leaves larger than one element use the dense solver.
    pub fn with_leaf_size(mut self, leaf_size: usize) -> Self {
        self.leaf_size = leaf_size;
        self.leaf_solver = if leaf_size > 1 {
            LeafSolver::DenseInverseCholesky
        } else {
            LeafSolver::ScalarRsqrt
        };
        self
    }

    pub fn with_refine(mut self, refine: RefineOptions) -> Self {
        self.refine = refine;
        self
    }

    pub fn with_corrections(mut self, capture: bool) -> Self {
        self.capture_corrections = capture;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.leaf_size == 0 {
            return Err(Error::InvalidArgument("leaf_size must be at least 1".into()));
        }
        if self.leaf_solver == LeafSolver::ScalarRsqrt && self.leaf_size > 1 {
            return Err(Error::InvalidArgument(
                "scalar_rsqrt leaves require leaf_size 1".into(),
            ));
        }
        self.refine.validate()
    }
}

/// Block-diagonal corrections `K_0..K_{r-1}` with `Σ_l K_l = Z`.
///
/// `K_l` collects `Z_final − Z₀` of every internal node at level `l`. All
/// leaf factors go to the deepest level, so with single-element leaves
/// `K_{r-1} = diag(S)^{-1/2}`. For the recursive method this per-node
/// difference is a convention; the method itself has no such split.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionLedger<T: Scalar = f64> {
    pub levels: Vec<GeneralMatrix<T>>,
}

impl<T: Scalar> CorrectionLedger<T> {
    pub fn sum(&self) -> GeneralMatrix<T> {
        let n = self.levels.first().map_or(0, |k| k.rows());
        self.levels
            .iter()
            .fold(GeneralMatrix::zeros(n, n), |acc, k| add_scaled(&acc, k, T::one()).expect("equal sizes"))
    }

    pub fn deepest(&self) -> Option<&GeneralMatrix<T>> {
        self.levels.last()
    }

    /// Apply a symmetric permutation to every level.
    pub fn permuted(&self, pos: &[usize]) -> Self {
        Self {
            levels: self.levels.iter().map(|k| k.permute(pos)).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FactorResult<T: Scalar = f64> {
    pub z: GeneralMatrix<T>,
    /// Refinement traces keyed by tree path, internal nodes only.
    pub traces: BTreeMap<String, RefineTrace>,
    pub corrections: Option<CorrectionLedger<T>>,
    /// Last error norm tracked at the root, in the run's norm.
    pub achieved: f64,
}

impl<T: Scalar> FactorResult<T> {
    pub fn total_iterations(&self) -> usize {
        self.traces.values().map(|t| t.iterations).sum()
    }
}

/// Factorize a single leaf.
pub fn leaf_factorize<T: Scalar>(s: &HermMatrix<T>, solver: LeafSolver) -> Result<GeneralMatrix<T>> {
    match solver {
        LeafSolver::ScalarRsqrt => {
            if s.n() != 1 {
                return Err(Error::InvalidArgument(format!(
                    "scalar_rsqrt needs a 1x1 leaf, got {0}x{0}",
                    s.n()
                )));
            }
            let d = s.get(0, 0).real();
            if d <= 0.0 || d.is_nan() {
                return Err(Error::NotPositiveDefinite(d));
            }
            Ok(GeneralMatrix::from_triplets(1, 1, [(0, 0, T::from_real(1.0 / d.sqrt()))]))
        }
        LeafSolver::DenseInverseCholesky => inverse_cholesky(s),
    }
}

struct Piece<T: Scalar> {
    level: usize,
    /// absolute tree position of the block
    offset: usize,
    k: GeneralMatrix<T>,
}

struct NodeOut<T: Scalar> {
    z: GeneralMatrix<T>,
    traces: Vec<(String, RefineTrace)>,
    pieces: Vec<Piece<T>>,
}

fn skipped_trace(opts: &RefineOptions, delta_norm: f64, nnz_delta: usize) -> RefineTrace {
    RefineTrace {
        m: opts.m,
        norm_kind: opts.norm,
        iterations: 0,
        delta_norms: vec![delta_norm],
        stop_cause: StopCause::Epsilon,
        nnz_delta: vec![nnz_delta],
        nnz_m: Vec::new(),
    }
}

fn solve<T: Scalar>(
    tree: &PartitionTree,
    id: usize,
    s: &HermMatrix<T>,
    cfg: &FactorConfig,
    deepest: usize,
) -> Result<NodeOut<T>> {
    let node = tree.node(id);
    let Some((a_id, c_id)) = node.children else {
        let z = leaf_factorize(s, cfg.leaf_solver)?.truncate(cfg.refine.threshold)?;
        let pieces = if cfg.capture_corrections {
            vec![Piece {
                level: deepest,
                offset: node.start,
                k: z.clone(),
            }]
        } else {
            Vec::new()
        };
        return Ok(NodeOut {
            z,
            traces: Vec::new(),
            pieces,
        });
    };

    let na = tree.node(a_id).len();
    let n = node.len();
    let s_a = s.principal(0..na);
    let s_c = s.principal(na..n);
    let (a, c) = rayon::join(
        || solve(tree, a_id, &s_a, cfg, deepest),
        || solve(tree, c_id, &s_c, cfg, deepest),
    );
    let (a, c) = (a?, c?);

    let th = cfg.refine.threshold;
    let z0 = GeneralMatrix::block_diag(&a.z, &c.z);
    // B lies strictly above the diagonal, so the upper storage holds all of it
    let b = s.upper_storage().submatrix(0..na, na..n);
    let (z, trace) = if b.nnz() == 0 {
        // decoupled children: Z₀ is already the factor
        let d = factorization_error(&s.to_general(), &z0, th)?;
        (z0.clone(), skipped_trace(&cfg.refine, d.norm(cfg.refine.norm), d.nnz()))
    } else {
        match cfg.method {
            Method::Recursive => iter_refine(s, &z0, &cfg.refine)?,
            Method::Localized => {
                let x = multiply(&a.z.adjoint(), &multiply(&b, &c.z, th)?, th)?.scale(-T::one());
                let delta0 = GeneralMatrix::off_diag(&x, &x.adjoint());
                local_refine(s, &z0, &delta0, &cfg.refine)?
            }
        }
    };

    let mut traces = a.traces;
    traces.extend(c.traces);
    traces.push((node.path.clone(), trace));
    let mut pieces = a.pieces;
    pieces.extend(c.pieces);
    if cfg.capture_corrections {
        pieces.push(Piece {
            level: node.level,
            offset: node.start,
            k: add_scaled(&z, &z0, -T::one())?,
        });
    }
    Ok(NodeOut { z, traces, pieces })
}

/// Factorize `s`, given in the tree order of `tree`.
pub fn factorize<T: Scalar>(s: &HermMatrix<T>, tree: &PartitionTree, cfg: &FactorConfig) -> Result<FactorResult<T>> {
    cfg.validate()?;
    if s.n() != tree.n() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} indices, partition covers {}",
            s.n(),
            tree.n()
        )));
    }
    let deepest = tree.levels() - 1;
    let s = s.truncate(cfg.refine.threshold)?;
    let out = solve(tree, PartitionTree::ROOT, &s, cfg, deepest)?;

    let achieved = match out.traces.last() {
        Some((_, t)) => *t.delta_norms.last().expect("nonempty trace"),
        None => verify_factorization(&s, &out.z, cfg.refine.norm)?,
    };
    let corrections = cfg.capture_corrections.then(|| {
        let n = s.n();
        let mut builders: Vec<TileBuilder<T>> = (0..=deepest).map(|_| TileBuilder::new(n, n)).collect();
        for p in &out.pieces {
            builders[p.level].add_shifted(&p.k, p.offset, p.offset);
        }
        CorrectionLedger {
            levels: builders.into_iter().map(|b| b.finish(0.0)).collect(),
        }
    });
    Ok(FactorResult {
        z: out.z,
        traces: out.traces.into_iter().collect(),
        corrections,
        achieved,
    })
}

/// The correction ledger of a run made with capture enabled.
pub fn extract_corrections<T: Scalar>(run: &FactorResult<T>) -> Result<&CorrectionLedger<T>> {
    run.corrections.as_ref().ok_or(Error::CaptureDisabled)
}

/// `‖I − Z* S Z‖` in the requested norm.
pub fn verify_factorization<T: Scalar>(s: &HermMatrix<T>, z: &GeneralMatrix<T>, kind: NormKind) -> Result<f64> {
    Ok(factorization_error(&s.to_general(), z, 0.0)?.norm(kind))
}

/// A factorization mapped back to the original index order.
#[derive(Clone, Debug)]
pub struct GeometricFactorization<T: Scalar = f64> {
    pub tree: PartitionTree,
    /// `z` and `corrections` in the original order.
    pub result: FactorResult<T>,
}

/// Partition by coordinate bisection, factorize in tree order and map the
/// factor and corrections back to the original order.
pub fn factorize_geometric<T: Scalar>(
    s: &HermMatrix<T>,
    g: &IndexGeometry,
    cfg: &FactorConfig,
) -> Result<GeometricFactorization<T>> {
    if s.n() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} indices, geometry has {}",
            s.n(),
            g.n()
        )));
    }
    let tree = build_partition(g, cfg.leaf_size)?;
    let sp = permute_symmetric(s, &tree)?;
    let mut result = factorize(&sp, &tree, cfg)?;
    result.z = tree.unpermute(&result.z);
    result.corrections = result.corrections.map(|c| c.permuted(tree.order()));
    Ok(GeometricFactorization { tree, result })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::dense::{herm_to_dense, to_dense};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy() -> HermMatrix {
        HermMatrix::from_row_major(2, &[1.0, 0.25, 0.25, 1.0]).unwrap()
    }

    fn tridiag(n: usize, beta: f64) -> HermMatrix {
        HermMatrix::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).chain((1..n).map(|i| (i - 1, i, beta))))
    }

    #[test]
    fn leaves() {
        let four = HermMatrix::from_triplets(1, [(0, 0, 4.0)]);
        assert_eq!(leaf_factorize(&four, LeafSolver::ScalarRsqrt).unwrap().get(0, 0), 0.5);
        let eye = HermMatrix::<f64>::identity(3);
        assert_eq!(leaf_factorize(&eye, LeafSolver::DenseInverseCholesky).unwrap(), GeneralMatrix::identity(3));
        let neg = HermMatrix::from_triplets(1, [(0, 0, -1.0)]);
        assert!(matches!(leaf_factorize(&neg, LeafSolver::ScalarRsqrt), Err(Error::NotPositiveDefinite(_))));
        assert!(leaf_factorize(&eye, LeafSolver::ScalarRsqrt).is_err());
    }

    #[test]
    fn random_dense_leaf() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = DMatrix::<f64>::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
        let spd = &g * g.transpose() + DMatrix::identity(4, 4);
        let s = crate::matrix::dense::herm_from_dense(&spd);
        let z = to_dense(&leaf_factorize(&s, LeafSolver::DenseInverseCholesky).unwrap());
        assert!((z.transpose() * herm_to_dense(&s) * &z - DMatrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn diagonal_input_needs_no_refinement() {
        let d = [4.0, 9.0, 2.0, 0.25, 7.0];
        let s = HermMatrix::from_triplets(5, d.iter().enumerate().map(|(i, &v)| (i, i, v)));
        let tree = PartitionTree::contiguous(5, 1).unwrap();
        for method in [Method::Recursive, Method::Localized] {
            let r = factorize(&s, &tree, &FactorConfig::new(method).with_corrections(true)).unwrap();
            for (i, &v) in d.iter().enumerate() {
                assert_eq!(r.z.get(i, i), 1.0 / v.sqrt());
            }
            assert_eq!(r.z.nnz(), 5);
            assert!(r.traces.values().all(|t| t.iterations == 0));
            assert_eq!(r.corrections.unwrap().levels[0].nnz(), 0);
        }
    }

    #[test]
    fn toy_converges() {
        let tree = PartitionTree::contiguous(2, 1).unwrap();
        for method in [Method::Recursive, Method::Localized] {
            let r = factorize(&toy(), &tree, &FactorConfig::new(method)).unwrap();
            assert!(verify_factorization(&toy(), &r.z, NormKind::Frobenius).unwrap() < 1e-10);
            assert!((r.traces["0"].delta_norms[1] - 0.046875f64.hypot(0.00390625) * 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn verify_examples() {
        let z0 = GeneralMatrix::<f64>::zeros(3, 3);
        let eye = HermMatrix::identity(3);
        assert!((verify_factorization(&eye, &z0, NormKind::Frobenius).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert!((verify_factorization(&eye, &z0, NormKind::Spectral).unwrap() - 1.0).abs() < 1e-12);
        let z1 = GeneralMatrix::from_row_major(2, 2, &[1.0, -0.125, -0.125, 1.0]);
        assert!((verify_factorization(&toy(), &z1, NormKind::Spectral).unwrap() - 0.05078125).abs() < 1e-10);
        assert!(verify_factorization(&toy(), &GeneralMatrix::identity(3), NormKind::Frobenius).is_err());
    }

    #[test]
    fn corrections_sum_to_factor() {
        let s = tridiag(64, 0.25);
        let tree = PartitionTree::contiguous(64, 1).unwrap();
        for method in [Method::Recursive, Method::Localized] {
            let r = factorize(&s, &tree, &FactorConfig::new(method).with_corrections(true)).unwrap();
            let k = extract_corrections(&r).unwrap();
            assert_eq!(k.levels.len(), 7);
            let diff = add_scaled(&k.sum(), &r.z, -1.0).unwrap();
            assert!(diff.frobenius_norm() < 1e-12);
            let deepest = k.deepest().unwrap();
            assert_eq!(deepest.nnz(), 64);
            assert!((0..64).all(|i| deepest.get(i, i) == 1.0));
            // K_1 is block diagonal over the two halves
            assert!(k.levels[1].iter().all(|(i, j, _)| (i < 32) == (j < 32)));
        }
        let plain = factorize(&s, &tree, &FactorConfig::new(Method::Localized)).unwrap();
        assert!(matches!(extract_corrections(&plain), Err(Error::CaptureDisabled)));
    }

    #[test]
    fn uneven_tree_and_blocked_leaves() {
        let s = tridiag(37, 0.3);
        for leaf in [1, 3, 8] {
            let tree = PartitionTree::contiguous(37, leaf).unwrap();
            let cfg = FactorConfig::new(Method::Localized).with_leaf_size(leaf).with_corrections(true);
            let r = factorize(&s, &tree, &cfg).unwrap();
            assert!(verify_factorization(&s, &r.z, NormKind::Frobenius).unwrap() < 1e-12);
            let diff = add_scaled(&r.corrections.unwrap().sum(), &r.z, -1.0).unwrap();
            assert!(diff.frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn geometric_round_trip() {
        let n = 20;
        let g = IndexGeometry::line((0..n).map(|i| ((i * 7) % n) as f64)).unwrap();
        // neighbours along the shuffled line
        let pos: Vec<usize> = (0..n).map(|i| (i * 7) % n).collect();
        let mut at = vec![0; n];
        for (i, &p) in pos.iter().enumerate() {
            at[p] = i;
        }
        let s = HermMatrix::from_triplets(
            n,
            (0..n).map(|i| (i, i, 1.0)).chain((1..n).map(|p| (at[p - 1], at[p], 0.2))),
        );
        let r = factorize_geometric(&s, &g, &FactorConfig::new(Method::Recursive)).unwrap();
        assert!(verify_factorization(&s, &r.result.z, NormKind::Frobenius).unwrap() < 1e-12);
    }
}
