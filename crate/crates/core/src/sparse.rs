//! Compressed sparse row matrices built from triplets.
//!
//! Triplets are sorted by `(row, col)` with a stable sort before duplicates are
//! summed, so a fixed input order gives bit-identical matrices.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::Result;

pub type Triplet = (usize, usize, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        CsrMatrix {
            nrows: d.len(),
            ncols: d.len(),
            indptr: (0..=d.len()).collect(),
            indices: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    /// Sums duplicate entries; explicit zeros are kept so the sparsity pattern
    /// depends only on the connectivity.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<Triplet>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) outside {nrows}x{ncols}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indptr[i + 1] += 1;
                indices.push(j);
                values.push(v);
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// Sorted column indices of row `i`.
    pub fn row_indices(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = Triplet> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        y.par_iter_mut().with_min_len(256).enumerate().for_each(|(i, yi)| {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        });
    }

    /// `A^T x`
    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, xi) in x.iter().enumerate() {
            if *xi != 0.0 {
                for (j, v) in self.row(i) {
                    y[j] += v * xi;
                }
            }
        }
        y
    }

    /// `x^T A x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> Self {
        let t = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `a A + b B`
    pub fn lin_comb(a: f64, lhs: &CsrMatrix, b: f64, rhs: &CsrMatrix) -> Self {
        assert_eq!((lhs.nrows, lhs.ncols), (rhs.nrows, rhs.ncols));
        let t = lhs
            .triplets()
            .map(|(i, j, v)| (i, j, a * v))
            .chain(rhs.triplets().map(|(i, j, v)| (i, j, b * v)))
            .collect();
        Self::from_triplets(lhs.nrows, lhs.ncols, t)
    }

    /// Block matrix from a grid of optional blocks. Every block row needs at
    /// least one present block and so does every block column.
    pub fn block(blocks: &[Vec<Option<&CsrMatrix>>]) -> Self {
        let nbr = blocks.len();
        let nbc = blocks[0].len();
        let mut row_sizes = vec![None; nbr];
        let mut col_sizes = vec![None; nbc];
        for (bi, brow) in blocks.iter().enumerate() {
            assert_eq!(brow.len(), nbc, "ragged block grid");
            for (bj, b) in brow.iter().enumerate() {
                if let Some(m) = b {
                    assert!(row_sizes[bi].is_none_or(|r| r == m.nrows), "block row size mismatch");
                    assert!(col_sizes[bj].is_none_or(|c| c == m.ncols), "block column size mismatch");
                    row_sizes[bi] = Some(m.nrows);
                    col_sizes[bj] = Some(m.ncols);
                }
            }
        }
        let offsets = |sizes: &[Option<usize>]| {
            let mut o = vec![0];
            for s in sizes {
                o.push(o.last().unwrap() + s.expect("empty block row or column"));
            }
            o
        };
        let ro = offsets(&row_sizes);
        let co = offsets(&col_sizes);
        let mut t = Vec::new();
        for (bi, brow) in blocks.iter().enumerate() {
            for (bj, b) in brow.iter().enumerate() {
                if let Some(m) = b {
                    t.extend(m.triplets().map(|(i, j, v)| (i + ro[bi], j + co[bj], v)));
                }
            }
        }
        Self::from_triplets(ro[nbr], co[nbc], t)
    }

    /// Block-diagonal matrix.
    pub fn block_diagonal(blocks: &[&CsrMatrix]) -> Self {
        let grid: Vec<Vec<Option<&CsrMatrix>>> = (0..blocks.len())
            .map(|i| (0..blocks.len()).map(|j| (i == j).then_some(blocks[i])).collect())
            .collect();
        Self::block(&grid)
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols);
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    pub(crate) fn to_faer(&self) -> faer::sparse::SparseColMat<usize, f64> {
        let t: Vec<_> = self
            .triplets()
            .map(|(i, j, v)| faer::sparse::Triplet::new(i, j, v))
            .collect();
        faer::sparse::SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t)
            .expect("valid triplets")
    }

    /// Coordinate text dump: a `rows cols nnz` header, then `row col value` lines.
    pub fn write_coordinate(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{i} {j} {v:.17e}")?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += a x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_triplets(n: usize, m: usize, k: usize, seed: u64) -> Vec<Triplet> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..k)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..m), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 0, 2.0), (1, 2, 0.5), (0, 1, -1.0)]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(1, 2), 1.5);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(1, 0), 0.0);
    }

    #[test]
    fn block_layout() {
        let i2 = CsrMatrix::identity(2);
        let r = CsrMatrix::from_triplets(1, 2, vec![(0, 0, 3.0), (0, 1, 4.0)]);
        let rt = r.transpose();
        let b = CsrMatrix::block(&[vec![Some(&i2), Some(&rt)], vec![Some(&r), None]]);
        let d = b.to_dense();
        assert_eq!(d.shape(), (3, 3));
        assert_eq!(d[(2, 1)], 4.0);
        assert_eq!(d[(1, 2)], 4.0);
        assert_eq!(d[(2, 2)], 0.0);
        assert_eq!(b.max_asymmetry(), 0.0);
    }

    proptest! {
        #[test]
        fn matvec_matches_dense(seed in 0u64..1000, n in 1usize..12, m in 1usize..12) {
            let a = CsrMatrix::from_triplets(n, m, random_triplets(n, m, 3 * n, seed));
            let x: Vec<f64> = (0..m).map(|i| (i as f64 * 0.37).sin()).collect();
            let dense = a.to_dense() * nalgebra::DVector::from_vec(x.clone());
            for (u, v) in a.matvec(&x).iter().zip(dense.iter()) {
                prop_assert!((u - v).abs() < 1e-14);
            }
            let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.91).cos()).collect();
            let dense_t = a.to_dense().transpose() * nalgebra::DVector::from_vec(y.clone());
            for (u, v) in a.transpose_matvec(&y).iter().zip(dense_t.iter()) {
                prop_assert!((u - v).abs() < 1e-14);
            }
            prop_assert_eq!(a.transpose().transpose(), a.clone());
        }

        #[test]
        fn lin_comb_matches_dense(seed in 0u64..1000, n in 1usize..10) {
            let a = CsrMatrix::from_triplets(n, n, random_triplets(n, n, 2 * n, seed));
            let b = CsrMatrix::from_triplets(n, n, random_triplets(n, n, 2 * n, seed + 7));
            let c = CsrMatrix::lin_comb(2.0, &a, -0.5, &b).to_dense();
            let expect = a.to_dense() * 2.0 - b.to_dense() * 0.5;
            prop_assert!((c - expect).amax() < 1e-14);
        }
    }

    #[test]
    fn assembly_is_order_deterministic() {
        let t = random_triplets(20, 20, 400, 3);
        let a = CsrMatrix::from_triplets(20, 20, t.clone());
        let b = CsrMatrix::from_triplets(20, 20, t);
        assert_eq!(a, b);
    }
}
