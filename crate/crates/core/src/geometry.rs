//! Index geometry: coordinates, the Euclidean (pseudo)metric, recursive
//! coordinate bisection and distance to a cut.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::matrix::market::fmt_f64;
use crate::matrix::{GeneralMatrix, HermMatrix};
use crate::scalar::Scalar;

/// Per-index points in up to three dimensions with Euclidean distance.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexGeometry {
    coords: Vec<[f64; 3]>,
    dim: usize,
}

impl IndexGeometry {
    /// `dim` is the number of meaningful coordinates (1–3); unused
    /// coordinates must be zero.
    pub fn new(coords: Vec<[f64; 3]>, dim: usize) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyGeometry);
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("dimension {dim} not in 1..=3")));
        }
        Ok(Self { coords, dim })
    }

    /// Points on a line at the given positions.
    pub fn line(xs: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(xs.into_iter().map(|x| [x, 0.0, 0.0]).collect(), 1)
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coord(&self, i: usize) -> [f64; 3] {
        self.coords[i]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.coords[i], self.coords[j]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    /// `|{j : d(i, j) < r}|` by exhaustive scan.
    pub fn neighborhood_count(&self, i: usize, r: f64) -> Result<usize> {
        if i >= self.n() {
            return Err(Error::InvalidArgument(format!("index {i} out of range 0..{}", self.n())));
        }
        if r.is_nan() || r < 0.0 {
            return Err(Error::InvalidArgument(format!("negative radius {r}")));
        }
        Ok((0..self.n()).filter(|&j| self.distance(i, j) < r).count())
    }

    /// Geometry seen through a reordering: new index `p` is old index `order[p]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            coords: order.iter().map(|&i| self.coords[i]).collect(),
            dim: self.dim,
        }
    }

    /// Largest pairwise distance, by exhaustive scan.
    pub fn diameter(&self) -> f64 {
        let n = self.n();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .fold(0.0, |m, (i, j)| m.max(self.distance(i, j)))
    }

    /// Read a coordinate file: one index per line, `x [y [z]]`; missing
    /// columns read as zero. Blank lines and lines starting with `#` are skipped.
    pub fn read(path: &Path) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut coords = Vec::new();
        let mut dim = 1;
        for (ln, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = t.split_whitespace().collect();
            if f.len() > 3 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: ln + 1,
                    msg: format!("expected at most 3 coordinates, found {}", f.len()),
                });
            }
            let mut p = [0.0; 3];
            for (k, s) in f.iter().enumerate() {
                p[k] = s.parse().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: ln + 1,
                    msg: format!("bad coordinate `{s}`"),
                })?;
            }
            dim = dim.max(f.len());
            coords.push(p);
        }
        Self::new(coords, dim)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for p in &self.coords {
            let cols: Vec<String> = p[..self.dim].iter().map(|&x| fmt_f64(x)).collect();
            writeln!(w, "{}", cols.join(" "))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One node of a partition tree; indices are positions in the tree order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionNode {
    pub start: usize,
    pub end: usize,
    pub level: usize,
    /// Dotted path from the root, e.g. `"0.1.0"`.
    pub path: String,
    pub children: Option<(usize, usize)>,
}

impl PartitionNode {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Recursive binary partition of `{0..n}`.
///
/// The leaves, read left to right, induce the tree order: position `p`
/// holds original index `order()[p]`. Every node covers a contiguous range
/// of positions, with its first child's range preceding its second child's.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionTree {
    order: Vec<usize>,
    nodes: Vec<PartitionNode>,
}

impl PartitionTree {
    pub const ROOT: usize = 0;

    /// Halving partition of positions `0..n` in their existing order,
    /// first half `⌈m/2⌉`.
    pub fn contiguous(n: usize, leaf_size: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGeometry);
        }
        if leaf_size == 0 {
            return Err(Error::InvalidArgument("leaf_size must be at least 1".into()));
        }
        let mut tree = Self {
            order: Vec::with_capacity(n),
            nodes: Vec::new(),
        };
        tree.grow((0..n).collect(), 0, "0".into(), leaf_size, &mut |_| {});
        Ok(tree)
    }

    fn grow(
        &mut self,
        mut idx: Vec<usize>,
        level: usize,
        path: String,
        leaf_size: usize,
        arrange: &mut dyn FnMut(&mut Vec<usize>),
    ) -> usize {
        let id = self.nodes.len();
        let start = self.order.len();
        self.nodes.push(PartitionNode {
            start,
            end: start,
            level,
            path: path.clone(),
            children: None,
        });
        if idx.len() <= leaf_size {
            self.order.extend_from_slice(&idx);
        } else {
            arrange(&mut idx);
            let right = idx.split_off(idx.len().div_ceil(2));
            let a = self.grow(idx, level + 1, format!("{path}.0"), leaf_size, arrange);
            let c = self.grow(right, level + 1, format!("{path}.1"), leaf_size, arrange);
            self.nodes[id].children = Some((a, c));
        }
        self.nodes[id].end = self.order.len();
        id
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Inverse of [`order`](Self::order): `positions()[i]` is the tree position of index `i`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (p, &i) in self.order.iter().enumerate() {
            pos[i] = p;
        }
        pos
    }

    pub fn nodes(&self) -> &[PartitionNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &PartitionNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> &PartitionNode {
        &self.nodes[Self::ROOT]
    }

    /// Number of recursion levels (root level 0 through the deepest leaf).
    pub fn levels(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0) + 1
    }

    /// Original indices of a node.
    pub fn indices(&self, id: usize) -> &[usize] {
        let n = &self.nodes[id];
        &self.order[n.start..n.end]
    }

    /// Original indices `(I_A, I_C)` of an internal node.
    pub fn split(&self, id: usize) -> Option<(&[usize], &[usize])> {
        self.nodes[id].children.map(|(a, c)| (self.indices(a), self.indices(c)))
    }

    /// Nested JSON: `{"path", "indices", "children"}` per node.
    pub fn to_json(&self) -> Value {
        fn rec(t: &PartitionTree, id: usize) -> Value {
            let node = t.node(id);
            let children: Vec<Value> = match node.children {
                Some((a, c)) => vec![rec(t, a), rec(t, c)],
                None => vec![],
            };
            json!({ "path": node.path, "indices": t.indices(id), "children": children })
        }
        rec(self, Self::ROOT)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        fn rec(t: &mut PartitionTree, v: &Value, level: usize, path: String) -> Result<usize> {
            let bad = || Error::InvalidArgument("malformed partition JSON".into());
            let indices: Vec<usize> = serde_json::from_value(v.get("indices").ok_or_else(bad)?.clone())?;
            let children = v.get("children").and_then(Value::as_array).cloned().unwrap_or_default();
            let id = t.nodes.len();
            let start = t.order.len();
            t.nodes.push(PartitionNode {
                start,
                end: start,
                level,
                path: path.clone(),
                children: None,
            });
            match children.len() {
                0 => t.order.extend_from_slice(&indices),
                2 => {
                    let a = rec(t, &children[0], level + 1, format!("{path}.0"))?;
                    let c = rec(t, &children[1], level + 1, format!("{path}.1"))?;
                    t.nodes[id].children = Some((a, c));
                    if t.order[start..] != indices[..] {
                        return Err(Error::InvalidArgument(format!("node {path}: children do not partition parent")));
                    }
                }
                _ => return Err(bad()),
            }
            t.nodes[id].end = t.order.len();
            Ok(id)
        }
        let mut t = Self {
            order: Vec::new(),
            nodes: Vec::new(),
        };
        rec(&mut t, v, 0, "0".into())?;
        let mut seen = vec![false; t.order.len()];
        for &i in &t.order {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument("partition is not a permutation of 0..n".into()));
            }
        }
        Ok(t)
    }

    /// Bring a matrix in tree order back to the original index order.
    pub fn unpermute<T: Scalar>(&self, a: &GeneralMatrix<T>) -> GeneralMatrix<T> {
        a.permute(&self.order)
    }
}

/// Recursive coordinate bisection.
///
/// Each node's indices are sorted along the axis of greatest extent (ties
/// to the lowest axis; equal coordinates ordered by index) and split at the
/// midpoint count, `⌈m/2⌉` to the first child. Subsets of at most
/// `leaf_size` indices become leaves.
pub fn build_partition(g: &IndexGeometry, leaf_size: usize) -> Result<PartitionTree> {
    if leaf_size == 0 {
        return Err(Error::InvalidArgument("leaf_size must be at least 1".into()));
    }
    if g.n() == 0 {
        return Err(Error::EmptyGeometry);
    }
    let mut tree = PartitionTree {
        order: Vec::with_capacity(g.n()),
        nodes: Vec::new(),
    };
    let mut arrange = |idx: &mut Vec<usize>| {
        let mut axis = 0;
        let mut best = f64::NEG_INFINITY;
        for k in 0..g.dim() {
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let x = g.coord(i)[k];
                (lo.min(x), hi.max(x))
            });
            if hi - lo > best {
                best = hi - lo;
                axis = k;
            }
        }
        idx.sort_by(|&a, &b| g.coord(a)[axis].total_cmp(&g.coord(b)[axis]).then(a.cmp(&b)));
    };
    tree.grow((0..g.n()).collect(), 0, "0".into(), leaf_size, &mut arrange);
    Ok(tree)
}

/// Distance to the cut for every index of one split.
#[derive(Clone, Debug, PartialEq)]
pub struct CutDistanceVector {
    /// `(index, d_cut(index))`, sorted by index.
    pub values: Vec<(usize, f64)>,
}

impl CutDistanceVector {
    pub fn get(&self, i: usize) -> Option<f64> {
        self.values
            .binary_search_by_key(&i, |&(k, _)| k)
            .ok()
            .map(|p| self.values[p].1)
    }

    /// Values indexed by `0..n`, if the split covers exactly that set.
    pub fn to_full(&self, n: usize) -> Option<Vec<f64>> {
        (self.values.len() == n && self.values.iter().enumerate().all(|(p, &(i, _))| p == i))
            .then(|| self.values.iter().map(|&(_, d)| d).collect())
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &(_, d)| m.max(d))
    }
}

/// `d_cut(i) = min_{k∈I_A} d(i,k) + min_{k∈I_C} d(i,k)` for every `i` in
/// `I_A ∪ I_C`. One of the two terms is zero since `i` lies on one side.
pub fn cut_distance(g: &IndexGeometry, side_a: &[usize], side_c: &[usize]) -> Result<CutDistanceVector> {
    if side_a.is_empty() || side_c.is_empty() {
        return Err(Error::InvalidArgument("both sides of a cut must be nonempty".into()));
    }
    let nearest = |i: usize, other: &[usize]| other.iter().fold(f64::INFINITY, |m, &k| m.min(g.distance(i, k)));
    let mut values: Vec<(usize, f64)> = side_a
        .iter()
        .map(|&i| (i, nearest(i, side_c)))
        .chain(side_c.iter().map(|&i| (i, nearest(i, side_a))))
        .collect();
    values.sort_by_key(|&(i, _)| i);
    if values.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidArgument("cut sides overlap".into()));
    }
    Ok(CutDistanceVector { values })
}

/// Permute `s` into the tree order.
pub fn permute_symmetric<T: Scalar>(s: &HermMatrix<T>, tree: &PartitionTree) -> Result<HermMatrix<T>> {
    if s.n() != tree.n() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} indices, partition covers {}",
            s.n(),
            tree.n()
        )));
    }
    Ok(s.permute(&tree.positions()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(nx: usize, ny: usize) -> IndexGeometry {
        let pts = (0..nx)
            .flat_map(|x| (0..ny).map(move |y| [x as f64, y as f64, 0.0]))
            .collect();
        IndexGeometry::new(pts, 2).unwrap()
    }

    #[test]
    fn line_of_four() {
        let g = IndexGeometry::line((0..4).map(f64::from)).unwrap();
        let t = build_partition(&g, 1).unwrap();
        let (a, c) = t.split(PartitionTree::ROOT).unwrap();
        assert_eq!((a, c), (&[0, 1][..], &[2, 3][..]));
        assert_eq!(t.nodes().iter().filter(|n| n.is_leaf()).count(), 4);
        assert_eq!(t.levels(), 3);
    }

    #[test]
    fn two_by_two_grid_splits_along_x() {
        let g = grid(2, 2);
        let t = build_partition(&g, 1).unwrap();
        let (a, c) = t.split(PartitionTree::ROOT).unwrap();
        let pa: Vec<[f64; 3]> = a.iter().map(|&i| g.coord(i)).collect();
        assert_eq!(pa, vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn odd_split_sizes() {
        let g = IndexGeometry::line((0..5).map(f64::from)).unwrap();
        let t = build_partition(&g, 2).unwrap();
        let (a, c) = t.split(0).unwrap();
        assert_eq!((a.len(), c.len()), (3, 2));
    }

    #[test]
    fn cut_distance_on_line() {
        let g = IndexGeometry::line((0..4).map(f64::from)).unwrap();
        let d = cut_distance(&g, &[0, 1], &[2, 3]).unwrap();
        assert_eq!(d.to_full(4).unwrap(), vec![2.0, 1.0, 1.0, 2.0]);
        assert!(cut_distance(&g, &[], &[0]).is_err());
        assert!(cut_distance(&g, &[0, 1], &[1]).is_err());
    }

    #[test]
    fn cut_distance_4x4_halves() {
        let g = grid(4, 4);
        let a: Vec<usize> = (0..8).collect();
        let c: Vec<usize> = (8..16).collect();
        assert_eq!(cut_distance(&g, &a, &c).unwrap().max(), 2.0);
    }

    #[test]
    fn neighborhoods() {
        let g = IndexGeometry::line((0..10).map(f64::from)).unwrap();
        assert_eq!(g.neighborhood_count(5, 2.5).unwrap(), 5);
        assert_eq!(g.neighborhood_count(5, 0.0).unwrap(), 0);
        assert!(g.neighborhood_count(10, 1.0).is_err());
        // the diagonal neighbour sits at sqrt(2) < 1.5
        assert_eq!(grid(3, 3).neighborhood_count(0, 1.5).unwrap(), 4);
        assert_eq!(grid(3, 3).neighborhood_count(0, 1.4).unwrap(), 3);
    }

    #[test]
    fn json_round_trip() {
        let t = build_partition(&grid(5, 3), 2).unwrap();
        let back = PartitionTree::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn permutation_moves_entries() {
        let s = HermMatrix::from_triplets(3, [(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0)]);
        let g = IndexGeometry::line([2.0, 1.0, 0.0]).unwrap();
        let t = build_partition(&g, 1).unwrap();
        assert_eq!(t.order(), &[2, 1, 0]);
        let p = permute_symmetric(&s, &t).unwrap();
        assert_eq!((p.get(0, 0), p.get(2, 2)), (3.0, 1.0));
        assert!(permute_symmetric(&HermMatrix::<f64>::identity(4), &t).is_err());
    }

    fn lattice_points(dim: usize, side: usize) -> IndexGeometry {
        let n = side.pow(dim as u32);
        let pts = (0..n)
            .map(|mut k| {
                let mut p = [0.0; 3];
                for d in (0..dim).rev() {
                    p[d] = (k % side) as f64;
                    k /= side;
                }
                p
            })
            .collect();
        IndexGeometry::new(pts, dim).unwrap()
    }

    proptest! {
        #[test]
        fn children_partition_parent_and_balance(n in 1usize..300, leaf in 1usize..5, dim in 1usize..4, seed in 0u64..1000) {
            let pts: Vec<[f64; 3]> = (0..n).map(|i| {
                let h = (i as u64 + 1).wrapping_mul(6364136223846793005).wrapping_add(seed);
                let mut p = [0.0; 3];
                for (d, x) in p.iter_mut().enumerate().take(dim) {
                    *x = ((h >> (8 * d)) % 17) as f64;
                }
                p
            }).collect();
            let g = IndexGeometry::new(pts, dim).unwrap();
            let t = build_partition(&g, leaf).unwrap();
            let mut sorted = t.order().to_vec();
            sorted.sort();
            prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
            for node in t.nodes() {
                match node.children {
                    Some((a, c)) => {
                        let (a, c) = (t.node(a), t.node(c));
                        prop_assert_eq!(a.start, node.start);
                        prop_assert_eq!(a.end, c.start);
                        prop_assert_eq!(c.end, node.end);
                        prop_assert!(a.len().abs_diff(c.len()) <= 1);
                    }
                    None => prop_assert!(node.len() <= leaf),
                }
            }
        }

        #[test]
        fn pseudometric_axioms(pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 3..12)) {
            let g = IndexGeometry::new(pts.iter().map(|&(x, y, z)| [x, y, z]).collect(), 3).unwrap();
            let n = g.n();
            for i in 0..n {
                prop_assert_eq!(g.distance(i, i), 0.0);
                for j in 0..n {
                    prop_assert_eq!(g.distance(i, j), g.distance(j, i));
                    for k in 0..n {
                        prop_assert!(g.distance(i, j) <= g.distance(i, k) + g.distance(k, j) + 1e-12);
                    }
                }
            }
        }

        #[test]
        fn lattice_neighborhood_bound(dim in 1usize..4, r in 0.0f64..4.0) {
            let side = [12, 8, 5][dim - 1];
            let g = lattice_points(dim, side);
            let bound = (2.0 * r + 1.0).powi(dim as i32);
            for i in 0..g.n() {
                prop_assert!(g.neighborhood_count(i, r).unwrap() as f64 <= bound);
            }
        }
    }

    #[test]
    fn cut_distance_matches_brute_force() {
        for (dim, side) in [(1, 256), (2, 16), (3, 6)] {
            let g = lattice_points(dim, side);
            let t = build_partition(&g, 1).unwrap();
            let (a, c) = t.split(0).unwrap();
            let fast = cut_distance(&g, a, c).unwrap();
            for i in 0..g.n() {
                let to_a = (0..g.n()).filter(|k| a.contains(k)).map(|k| g.distance(i, k)).fold(f64::INFINITY, f64::min);
                let to_c = (0..g.n()).filter(|k| c.contains(k)).map(|k| g.distance(i, k)).fold(f64::INFINITY, f64::min);
                assert_eq!(fast.get(i).unwrap(), to_a + to_c);
            }
        }
    }
}
