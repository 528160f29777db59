use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Edge length of the dense tiles that make up a block-sparse matrix.
pub const BLOCK_SIZE: usize = 64;

#[inline]
pub(crate) fn block_count(len: usize) -> usize {
    len.div_ceil(BLOCK_SIZE)
}

#[inline]
pub(crate) fn block_len(len: usize, b: usize) -> usize {
    BLOCK_SIZE.min(len - b * BLOCK_SIZE)
}

/// One block row: tiles sorted by block column, each stored dense row-major.
#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct BlockRow<T> {
    pub cols: Vec<usize>,
    pub tiles: Vec<Vec<T>>,
}

impl<T: Scalar> BlockRow<T> {
    fn find(&self, bc: usize) -> Option<&[T]> {
        self.cols
            .binary_search(&bc)
            .ok()
            .map(|p| self.tiles[p].as_slice())
    }
}

/// Truncate a tile in place; returns false when nothing nonzero survives.
fn truncate_tile<T: Scalar>(tile: &mut [T], threshold: f64) -> bool {
    let mut any = false;
    for x in tile.iter_mut() {
        if threshold > 0.0 && x.magnitude() < threshold {
            *x = T::zero();
        } else if !x.is_exact_zero() {
            any = true;
        }
    }
    any
}

fn finish_row<T: Scalar>(map: BTreeMap<usize, Vec<T>>, threshold: f64) -> BlockRow<T> {
    let mut row = BlockRow {
        cols: Vec::with_capacity(map.len()),
        tiles: Vec::with_capacity(map.len()),
    };
    for (c, mut t) in map {
        if truncate_tile(&mut t, threshold) {
            row.cols.push(c);
            row.tiles.push(t);
        }
    }
    row
}

/// General (possibly non-square) matrix in block-sparse storage.
///
/// Entries are grouped into `BLOCK_SIZE`² dense tiles; tiles without any
/// nonzero entry are not stored. Entries whose magnitude falls below
/// `drop_threshold` are removed whenever the matrix is produced by a
/// constructor or an arithmetic operation. A threshold of zero keeps every
/// computed value (exact mode).
#[derive(Clone, Debug)]
pub struct GeneralMatrix<T: Scalar = f64> {
    rows: usize,
    cols: usize,
    drop_threshold: f64,
    pub(crate) brows: Vec<BlockRow<T>>,
}

impl<T: Scalar> PartialEq for GeneralMatrix<T> {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.brows == other.brows
    }
}

/// Accumulates entries into tiles before truncation.
pub(crate) struct TileBuilder<T> {
    rows: usize,
    cols: usize,
    brows: Vec<BTreeMap<usize, Vec<T>>>,
}

impl<T: Scalar> TileBuilder<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            brows: (0..block_count(rows)).map(|_| BTreeMap::new()).collect(),
        }
    }

    fn tile_mut(&mut self, bi: usize, bj: usize) -> &mut Vec<T> {
        let (rows, cols) = (self.rows, self.cols);
        self.brows[bi]
            .entry(bj)
            .or_insert_with(|| vec![T::zero(); block_len(rows, bi) * block_len(cols, bj)])
    }

    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (bi, bj) = (i / BLOCK_SIZE, j / BLOCK_SIZE);
        let w = block_len(self.cols, bj);
        let t = self.tile_mut(bi, bj);
        t[(i % BLOCK_SIZE) * w + j % BLOCK_SIZE] += v;
    }

    /// Add `src` shifted by (`row_off`, `col_off`), copying row segments.
    pub fn add_shifted(&mut self, src: &GeneralMatrix<T>, row_off: usize, col_off: usize) {
        for (bi, brow) in src.brows.iter().enumerate() {
            let h = block_len(src.rows, bi);
            for (&bj, tile) in brow.cols.iter().zip(&brow.tiles) {
                let w = block_len(src.cols, bj);
                for r in 0..h {
                    let gi = row_off + bi * BLOCK_SIZE + r;
                    let mut c0 = 0;
                    while c0 < w {
                        let gj = col_off + bj * BLOCK_SIZE + c0;
                        let (dbi, dbj) = (gi / BLOCK_SIZE, gj / BLOCK_SIZE);
                        let dw = block_len(self.cols, dbj);
                        let dc = gj % BLOCK_SIZE;
                        let len = (w - c0).min(dw - dc);
                        let dr = gi % BLOCK_SIZE;
                        let dst = self.tile_mut(dbi, dbj);
                        let seg = &tile[r * w + c0..r * w + c0 + len];
                        for (d, s) in dst[dr * dw + dc..dr * dw + dc + len].iter_mut().zip(seg) {
                            *d += *s;
                        }
                        c0 += len;
                    }
                }
            }
        }
    }

    pub fn finish(self, drop_threshold: f64) -> GeneralMatrix<T> {
        GeneralMatrix {
            rows: self.rows,
            cols: self.cols,
            drop_threshold,
            brows: self
                .brows
                .into_iter()
                .map(|m| finish_row(m, drop_threshold))
                .collect(),
        }
    }
}

impl<T: Scalar> GeneralMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            drop_threshold: 0.0,
            brows: vec![BlockRow::default(); block_count(rows)],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, T::one())))
    }

    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, entries: impl IntoIterator<Item = (usize, usize, T)>) -> Self {
        let mut b = TileBuilder::new(rows, cols);
        for (i, j, v) in entries {
            assert!(i < rows && j < cols, "entry ({i},{j}) outside {rows}x{cols}");
            b.add(i, j, v);
        }
        b.finish(0.0)
    }

    /// Build from a dense row-major slice.
    pub fn from_row_major(rows: usize, cols: usize, data: &[T]) -> Self {
        assert_eq!(data.len(), rows * cols);
        let brows = (0..block_count(rows))
            .map(|bi| {
                let h = block_len(rows, bi);
                let mut map = BTreeMap::new();
                for bj in 0..block_count(cols) {
                    let w = block_len(cols, bj);
                    let mut t = Vec::with_capacity(h * w);
                    for r in 0..h {
                        let start = (bi * BLOCK_SIZE + r) * cols + bj * BLOCK_SIZE;
                        t.extend_from_slice(&data[start..start + w]);
                    }
                    map.insert(bj, t);
                }
                finish_row(map, 0.0)
            })
            .collect();
        Self {
            rows,
            cols,
            drop_threshold: 0.0,
            brows,
        }
    }

    pub fn to_row_major(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows * self.cols];
        for (i, j, v) in self.iter() {
            out[i * self.cols + j] = v;
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn drop_threshold(&self) -> f64 {
        self.drop_threshold
    }

    /// Set the drop threshold and truncate accordingly.
    pub fn with_drop_threshold(mut self, threshold: f64) -> Result<Self> {
        if threshold < 0.0 || threshold.is_nan() {
            return Err(Error::NegativeThreshold(threshold));
        }
        self.drop_threshold = threshold;
        self.retain_above(threshold);
        Ok(self)
    }

    fn retain_above(&mut self, threshold: f64) {
        for row in &mut self.brows {
            let mut keep_cols = Vec::with_capacity(row.cols.len());
            let mut keep_tiles = Vec::with_capacity(row.cols.len());
            for (c, mut t) in row.cols.drain(..).zip(row.tiles.drain(..)) {
                if truncate_tile(&mut t, threshold) {
                    keep_cols.push(c);
                    keep_tiles.push(t);
                }
            }
            row.cols = keep_cols;
            row.tiles = keep_tiles;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        assert!(i < self.rows && j < self.cols);
        let w = block_len(self.cols, j / BLOCK_SIZE);
        self.brows[i / BLOCK_SIZE]
            .find(j / BLOCK_SIZE)
            .map_or(T::zero(), |t| t[(i % BLOCK_SIZE) * w + j % BLOCK_SIZE])
    }

    /// Nonzero entries as `(row, col, value)`, ordered by tile then row.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.brows.iter().enumerate().flat_map(move |(bi, row)| {
            let h = block_len(self.rows, bi);
            row.cols.iter().zip(&row.tiles).flat_map(move |(&bj, t)| {
                let w = block_len(self.cols, bj);
                (0..h * w).filter_map(move |p| {
                    let v = t[p];
                    (!v.is_exact_zero()).then(|| (bi * BLOCK_SIZE + p / w, bj * BLOCK_SIZE + p % w, v))
                })
            })
        })
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> usize {
        self.brows
            .iter()
            .flat_map(|r| &r.tiles)
            .map(|t| t.iter().filter(|x| !x.is_exact_zero()).count())
            .sum()
    }

    /// Number of stored tiles.
    pub fn tile_count(&self) -> usize {
        self.brows.iter().map(|r| r.cols.len()).sum()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.brows
            .iter()
            .flat_map(|r| &r.tiles)
            .flat_map(|t| t.iter())
            .fold(0.0, |m, x| m.max(x.magnitude()))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out: Vec<BTreeMap<usize, Vec<T>>> = (0..block_count(self.cols)).map(|_| BTreeMap::new()).collect();
        for (bi, row) in self.brows.iter().enumerate() {
            let h = block_len(self.rows, bi);
            for (&bj, t) in row.cols.iter().zip(&row.tiles) {
                let w = block_len(self.cols, bj);
                let mut tt = vec![T::zero(); h * w];
                for r in 0..h {
                    for c in 0..w {
                        tt[c * h + r] = t[r * w + c].conjugate();
                    }
                }
                out[bj].insert(bi, tt);
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            drop_threshold: self.drop_threshold,
            brows: out.into_iter().map(|m| finish_row(m, 0.0)).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = self.clone();
        for t in out.brows.iter_mut().flat_map(|r| r.tiles.iter_mut()) {
            for x in t.iter_mut() {
                *x *= s;
            }
        }
        let th = out.drop_threshold;
        out.retain_above(th);
        out
    }

    /// Copy of the rectangular region `rows × cols`.
    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        assert!(rows.end <= self.rows && cols.end <= self.cols);
        let mut b = TileBuilder::new(rows.len(), cols.len());
        if rows.start.is_multiple_of(BLOCK_SIZE) && cols.start.is_multiple_of(BLOCK_SIZE) {
            // aligned: copy whole tiles and trim at the far edges
            let (r0, c0) = (rows.start / BLOCK_SIZE, cols.start / BLOCK_SIZE);
            for bi in 0..block_count(rows.len()) {
                let h = block_len(rows.len(), bi);
                let src_row = &self.brows[r0 + bi];
                for (&sbj, t) in src_row.cols.iter().zip(&src_row.tiles) {
                    if sbj < c0 || sbj >= c0 + block_count(cols.len()) {
                        continue;
                    }
                    let bj = sbj - c0;
                    let sw = block_len(self.cols, sbj);
                    let w = block_len(cols.len(), bj);
                    let dst = b.tile_mut(bi, bj);
                    for r in 0..h {
                        dst[r * w..r * w + w].copy_from_slice(&t[r * sw..r * sw + w]);
                    }
                }
            }
            return b.finish(self.drop_threshold);
        }
        for bi in rows.start / BLOCK_SIZE..block_count(rows.end) {
            let h = block_len(self.rows, bi);
            let row = &self.brows[bi];
            for (&bj, t) in row.cols.iter().zip(&row.tiles) {
                let w = block_len(self.cols, bj);
                let (cs, ce) = (bj * BLOCK_SIZE, bj * BLOCK_SIZE + w);
                if ce <= cols.start || cs >= cols.end {
                    continue;
                }
                for r in 0..h {
                    let gi = bi * BLOCK_SIZE + r;
                    if !rows.contains(&gi) {
                        continue;
                    }
                    for c in cols.start.max(cs)..cols.end.min(ce) {
                        let v = t[r * w + c - cs];
                        if !v.is_exact_zero() {
                            b.add(gi - rows.start, c - cols.start, v);
                        }
                    }
                }
            }
        }
        b.finish(self.drop_threshold)
    }

    /// `[[a, 0], [0, c]]`.
    pub fn block_diag(a: &Self, c: &Self) -> Self {
        let mut b = TileBuilder::new(a.rows + c.rows, a.cols + c.cols);
        b.add_shifted(a, 0, 0);
        b.add_shifted(c, a.rows, a.cols);
        b.finish(a.drop_threshold.max(c.drop_threshold))
    }

    /// `[[0, x], [y, 0]]` with `x` of size p×q and `y` of size q×p.
    pub fn off_diag(x: &Self, y: &Self) -> Self {
        assert_eq!((x.rows, x.cols), (y.cols, y.rows));
        let n = x.rows + y.rows;
        let mut b = TileBuilder::new(n, n);
        b.add_shifted(x, 0, x.rows);
        b.add_shifted(y, x.rows, 0);
        b.finish(x.drop_threshold.max(y.drop_threshold))
    }

    /// Symmetric permutation: entry `(i, j)` moves to `(pos[i], pos[j])`.
    pub fn permute(&self, pos: &[usize]) -> Self {
        assert!(self.is_square() && pos.len() == self.rows);
        let mut b = TileBuilder::new(self.rows, self.cols);
        for (i, j, v) in self.iter() {
            b.add(pos[i], pos[j], v);
        }
        b.finish(self.drop_threshold)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.brows
            .iter()
            .flat_map(|r| &r.tiles)
            .flat_map(|t| t.iter())
            .map(|x| x.modulus_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        assert!(x.len() == self.cols && y.len() == self.rows);
        y.iter_mut().for_each(|v| *v = T::zero());
        for (bi, row) in self.brows.iter().enumerate() {
            let h = block_len(self.rows, bi);
            for (&bj, t) in row.cols.iter().zip(&row.tiles) {
                let w = block_len(self.cols, bj);
                let xs = &x[bj * BLOCK_SIZE..bj * BLOCK_SIZE + w];
                for r in 0..h {
                    let mut acc = T::zero();
                    for (a, b) in t[r * w..r * w + w].iter().zip(xs) {
                        acc += *a * *b;
                    }
                    y[bi * BLOCK_SIZE + r] += acc;
                }
            }
        }
    }

    /// Apply the drop rule `|x| < threshold → 0` and record the threshold.
    pub fn truncate(&self, threshold: f64) -> Result<Self> {
        self.clone().with_drop_threshold(threshold)
    }

    /// Keep only the tiles in block columns `>= block row` (upper block triangle).
    pub(crate) fn upper_block_triangle(&self) -> Self {
        let mut out = self.clone();
        for (bi, row) in out.brows.iter_mut().enumerate() {
            let p = row.cols.partition_point(|&c| c < bi);
            row.cols.drain(..p);
            row.tiles.drain(..p);
        }
        out
    }

    pub(crate) fn diagonal_tile_mut(&mut self, b: usize) -> Option<&mut Vec<T>> {
        let row = &mut self.brows[b];
        row.cols.binary_search(&b).ok().map(move |p| &mut row.tiles[p])
    }

    pub(crate) fn set_drop_threshold_unchecked(&mut self, threshold: f64) {
        self.drop_threshold = threshold;
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Shape {
    Full,
    UpperBlocks,
}

fn product<T: Scalar>(a: &GeneralMatrix<T>, b: &GeneralMatrix<T>, threshold: f64, shape: Shape) -> Result<GeneralMatrix<T>> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    if threshold < 0.0 || threshold.is_nan() {
        return Err(Error::NegativeThreshold(threshold));
    }
    let nbc = block_count(b.cols);
    let brows = a
        .brows
        .par_iter()
        .enumerate()
        .map(|(bi, arow)| {
            let h = block_len(a.rows, bi);
            let mut acc: Vec<Option<Vec<T>>> = vec![None; nbc];
            for (&bk, at) in arow.cols.iter().zip(&arow.tiles) {
                let kk = block_len(a.cols, bk);
                let brow = &b.brows[bk];
                for (&bj, bt) in brow.cols.iter().zip(&brow.tiles) {
                    if shape == Shape::UpperBlocks && bj < bi {
                        continue;
                    }
                    let w = block_len(b.cols, bj);
                    let c = acc[bj].get_or_insert_with(|| vec![T::zero(); h * w]);
                    T::gemm_acc(h, kk, w, at, bt, c);
                }
            }
            let mut row = BlockRow::default();
            for (bj, t) in acc.into_iter().enumerate() {
                if let Some(mut t) = t {
                    if truncate_tile(&mut t, threshold) {
                        row.cols.push(bj);
                        row.tiles.push(t);
                    }
                }
            }
            row
        })
        .collect();
    Ok(GeneralMatrix {
        rows: a.rows,
        cols: b.cols,
        drop_threshold: threshold,
        brows,
    })
}

/// `a · b` with entries of magnitude below `threshold` removed from the result.
pub fn multiply<T: Scalar>(a: &GeneralMatrix<T>, b: &GeneralMatrix<T>, threshold: f64) -> Result<GeneralMatrix<T>> {
    product(a, b, threshold, Shape::Full)
}

/// Upper block triangle of `a · b` (tiles with block column ≥ block row).
///
/// Used for products whose result is known to be Hermitian; the caller
/// mirrors the upper triangle.
pub(crate) fn multiply_upper_blocks<T: Scalar>(
    a: &GeneralMatrix<T>,
    b: &GeneralMatrix<T>,
    threshold: f64,
) -> Result<GeneralMatrix<T>> {
    product(a, b, threshold, Shape::UpperBlocks)
}

/// `a + s·b`, truncated to `a`'s drop threshold.
pub fn add_scaled<T: Scalar>(a: &GeneralMatrix<T>, b: &GeneralMatrix<T>, s: T) -> Result<GeneralMatrix<T>> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::DimensionMismatch(format!(
            "cannot add {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let threshold = a.drop_threshold;
    let brows = a
        .brows
        .iter()
        .zip(&b.brows)
        .map(|(ra, rb)| {
            let mut map: BTreeMap<usize, Vec<T>> = ra.cols.iter().copied().zip(ra.tiles.iter().cloned()).collect();
            for (&c, t) in rb.cols.iter().zip(&rb.tiles) {
                match map.get_mut(&c) {
                    Some(dst) => {
                        for (d, x) in dst.iter_mut().zip(t) {
                            *d += s * *x;
                        }
                    }
                    None => {
                        map.insert(c, t.iter().map(|x| s * *x).collect());
                    }
                }
            }
            finish_row(map, threshold)
        })
        .collect();
    Ok(GeneralMatrix {
        rows: a.rows,
        cols: a.cols,
        drop_threshold: threshold,
        brows,
    })
}
