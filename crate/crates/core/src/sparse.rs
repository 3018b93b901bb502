//! Compressed sparse row storage and the few operations the solver needs.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

/// Coordinate-format accumulator.
///
/// Duplicates are summed in insertion order, so the same sequence of pushes
/// always yields bit-identical matrices. Entries that sum to zero are kept:
/// the pattern is the element stencil, not the numerical support.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder { nrows, ncols, entries: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        TripletBuilder { nrows, ncols, entries: Vec::with_capacity(cap) }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols, "({i}, {j}) outside {}x{}", self.nrows, self.ncols);
        self.entries.push((i, j, v));
    }

    /// Adds every entry of `m` shifted by `(row, col)`.
    pub fn push_block(&mut self, row: usize, col: usize, m: &CsrMatrix) {
        for (i, j, v) in m.iter() {
            self.push(row + i, col + j, v);
        }
    }

    /// Adds `m^T` shifted by `(row, col)`.
    pub fn push_block_transposed(&mut self, row: usize, col: usize, m: &CsrMatrix) {
        for (i, j, v) in m.iter() {
            self.push(row + j, col + i, v);
        }
    }

    pub fn build(self) -> CsrMatrix {
        let TripletBuilder { nrows, ncols, mut entries } = self;
        // stable sort keeps insertion order among duplicates
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut data: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                data.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix { nrows, ncols, indptr, indices, data }
    }
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: d.to_vec(),
        }
    }

    /// Builds from raw CSR arrays, checking their consistency.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<f64>,
    ) -> Result<Self> {
        let ok = indptr.len() == nrows + 1
            && indptr[0] == 0
            && indptr.windows(2).all(|w| w[0] <= w[1])
            && indptr[nrows] == indices.len()
            && indices.len() == data.len()
            && indices.iter().all(|&j| j < ncols);
        if !ok {
            return Err(Error::DimensionMismatch("inconsistent CSR arrays".into()));
        }
        Ok(CsrMatrix { nrows, ncols, indptr, indices, data })
    }

    /// Dense column vector `v` as an `n x 1` matrix.
    pub fn column(v: &[f64]) -> Self {
        let mut b = TripletBuilder::with_capacity(v.len(), 1, v.len());
        for (i, &x) in v.iter().enumerate() {
            b.push(i, 0, x);
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.data[r].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.data[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `y = A^T x`.
    pub fn matvec_transposed(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, j, v) in self.iter() {
            y[j] += v * x[i];
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut count = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            count[j + 1] += 1;
        }
        for c in 0..self.ncols {
            count[c + 1] += count[c];
        }
        let indptr = count.clone();
        let mut next = count;
        let mut indices = vec![0; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        for (i, j, v) in self.iter() {
            let k = next[j];
            indices[k] = i;
            data[k] = v;
            next[j] += 1;
        }
        CsrMatrix { nrows: self.ncols, ncols: self.nrows, indptr, indices, data }
    }

    pub fn scale(&self, s: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `diag(left) * A * diag(right)`.
    pub fn scale_rows_cols(&self, left: &[f64], right: &[f64]) -> CsrMatrix {
        assert_eq!(left.len(), self.nrows);
        assert_eq!(right.len(), self.ncols);
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in out.indptr[i]..out.indptr[i + 1] {
                out.data[k] *= left[i] * right[out.indices[k]];
            }
        }
        out
    }

    /// `a A + b B` on the union pattern.
    pub fn add_scaled(&self, a: f64, other: &CsrMatrix, b: f64) -> Result<CsrMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut t = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for (i, j, v) in self.iter() {
            t.push(i, j, a * v);
        }
        for (i, j, v) in other.iter() {
            t.push(i, j, b * v);
        }
        Ok(t.build())
    }

    /// Sparse product `A B` (row-by-row Gustavson).
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let n = other.ncols;
        let mut acc = vec![0.0; n];
        let mut mark = vec![usize::MAX; n];
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        let mut cols = Vec::new();
        for i in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                indices.push(j);
                data.push(acc[j]);
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix { nrows: self.nrows, ncols: n, indptr, indices, data })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.ncols];
        for (_, j, v) in self.iter() {
            col[j] += v.abs();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    /// `max |A - B|` over the union pattern.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> Result<f64> {
        Ok(self.add_scaled(1.0, other, -1.0)?.max_abs())
    }

    /// `max |A - A^T|`.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.transpose()).unwrap_or(f64::INFINITY)
    }

    /// Restriction to the given rows and columns, in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_pos = vec![usize::MAX; self.ncols];
        for (p, &c) in cols.iter().enumerate() {
            col_pos[c] = p;
        }
        let mut t = TripletBuilder::new(rows.len(), cols.len());
        for (p, &r) in rows.iter().enumerate() {
            for (j, v) in self.row(r) {
                if col_pos[j] != usize::MAX {
                    t.push(p, col_pos[j], v);
                }
            }
        }
        t.build()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            d[(i, j)] += v;
        }
        d
    }

    /// Writes the lower triangle in MatrixMarket `coordinate real symmetric`
    /// format (or `general` if the matrix is not symmetric).
    pub fn write_matrix_market(&self, path: impl AsRef<Path>) -> Result<()> {
        let symmetric = self.nrows == self.ncols && self.asymmetry() <= 1e-13 * self.max_abs();
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let kind = if symmetric { "symmetric" } else { "general" };
        writeln!(out, "%%MatrixMarket matrix coordinate real {kind}")?;
        let entries: Vec<_> = self.iter().filter(|&(i, j, _)| !symmetric || j <= i).collect();
        writeln!(out, "{} {} {}", self.nrows, self.ncols, entries.len())?;
        for (i, j, v) in entries {
            writeln!(out, "{} {} {:?}", i + 1, j + 1, v)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CsrMatrix {
        let mut t = TripletBuilder::new(3, 4);
        t.push(0, 1, 2.0);
        t.push(2, 3, -1.0);
        t.push(0, 1, 0.5);
        t.push(1, 0, 4.0);
        t.push(2, 0, 3.0);
        t.build()
    }

    #[test]
    fn duplicates_are_summed() {
        let a = sample();
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.get(0, 1), 2.5);
        assert_eq!(a.get(0, 0), 0.0);
        assert_eq!(a.indptr(), &[0, 1, 2, 4]);
    }

    #[test]
    fn products_match_dense() {
        let a = sample();
        let b = a.transpose();
        let ab = a.matmul(&b).unwrap();
        let want = a.to_dense() * b.to_dense();
        assert!((ab.to_dense() - want).amax() < 1e-15);
        let x = [1.0, -2.0, 0.5, 3.0];
        let y = a.matvec(&x);
        let yd = a.to_dense() * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(y, yd.as_slice());
        let z = a.matvec_transposed(&[1.0, 2.0, 3.0]);
        assert_eq!(z, b.matvec(&[1.0, 2.0, 3.0]));
    }

    #[test]
    fn norms_and_symmetry() {
        let a = sample();
        assert_eq!(a.norm1(), 7.0);
        assert_eq!(a.max_abs(), 4.0);
        let s = a.matmul(&a.transpose()).unwrap();
        assert_eq!(s.asymmetry(), 0.0);
        assert!(a.asymmetry().is_infinite());
    }

    #[test]
    fn submatrix_and_blocks() {
        let a = sample();
        let s = a.submatrix(&[2, 0], &[3, 1]);
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 2.5]));
        let mut t = TripletBuilder::new(7, 7);
        t.push_block(0, 3, &a);
        t.push_block_transposed(3, 0, &a);
        let big = t.build();
        assert_eq!(big.asymmetry(), 0.0);
        assert_eq!(big.get(2, 6), -1.0);
    }

    #[test]
    fn matrix_market_export() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        let a = sample();
        let s = a.matmul(&a.transpose()).unwrap();
        s.write_matrix_market(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric"));
        let lower = s.iter().filter(|&(i, j, _)| j <= i).count();
        assert_eq!(text.lines().count(), 2 + lower);
    }
}
