//! Compressed sparse row storage with a fixed pattern and scatter-add.

use rayon::prelude::*;

/// Rows shorter than this are multiplied sequentially.
const PAR_MIN_ROWS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Symmetric matrices share the CSR layout; symmetry is a property checked
/// with [`CsrMatrix::max_asymmetry`], not a storage scheme.
pub type SparseSymmetricMatrix = CsrMatrix;

impl CsrMatrix {
    /// Zero matrix with the given per-row column sets. Columns in each row
    /// are sorted and deduplicated.
    pub fn from_pattern(nrows: usize, ncols: usize, mut rows: Vec<Vec<usize>>) -> Self {
        assert_eq!(rows.len(), nrows);
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for cols in rows.iter_mut() {
            cols.sort_unstable();
            cols.dedup();
            debug_assert!(cols.last().map_or(true, |&c| c < ncols));
            col_idx.extend_from_slice(cols);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
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

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    fn position(&self, r: usize, c: usize) -> Option<usize> {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[a..b].binary_search(&c).ok().map(|k| a + k)
    }

    /// Adds `v` to entry `(r, c)`. Panics if the entry is not in the pattern.
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let k = self
            .position(r, c)
            .unwrap_or_else(|| panic!("entry ({r}, {c}) outside sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |k| self.values[k])
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        let row = |(r, yr): (usize, &mut f64)| {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut s = 0.0;
            for k in a..b {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yr = s;
        };
        if self.nrows >= PAR_MIN_ROWS {
            y.par_iter_mut().enumerate().for_each(row);
        } else {
            y.iter_mut().enumerate().for_each(row);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mul_vec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let k = next[c];
                col_idx[k] = r;
                values[k] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `alpha * A + beta * B` on the union of the two patterns.
    pub fn linear_combination(alpha: f64, a: &CsrMatrix, beta: f64, b: &CsrMatrix) -> CsrMatrix {
        assert_eq!((a.nrows, a.ncols), (b.nrows, b.ncols));
        let mut out = CsrBuilder::new(a.ncols);
        for r in 0..a.nrows {
            let (ca, va) = a.row(r);
            let (cb, vb) = b.row(r);
            let (mut i, mut j) = (0, 0);
            while i < ca.len() || j < cb.len() {
                let next_a = ca.get(i).copied().unwrap_or(usize::MAX);
                let next_b = cb.get(j).copied().unwrap_or(usize::MAX);
                if next_a == next_b {
                    out.push(next_a, alpha * va[i] + beta * vb[j]);
                    i += 1;
                    j += 1;
                } else if next_a < next_b {
                    out.push(next_a, alpha * va[i]);
                    i += 1;
                } else {
                    out.push(next_b, beta * vb[j]);
                    j += 1;
                }
            }
            out.end_row();
        }
        out.finish()
    }

    /// Largest `|A_ij - A_ji|` over all stored entries (square matrices).
    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols);
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] += v;
            }
        }
        out
    }
}

/// Builds a CSR matrix row by row. Columns pushed within a row must be
/// strictly increasing.
#[derive(Debug)]
pub struct CsrBuilder {
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrBuilder {
    pub fn new(ncols: usize) -> Self {
        CsrBuilder {
            ncols,
            row_ptr: vec![0],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, col: usize, value: f64) {
        debug_assert!(col < self.ncols);
        debug_assert!(
            self.col_idx.len() == *self.row_ptr.last().unwrap() || *self.col_idx.last().unwrap() < col,
            "columns must increase within a row"
        );
        self.col_idx.push(col);
        self.values.push(value);
    }

    pub fn end_row(&mut self) {
        self.row_ptr.push(self.col_idx.len());
    }

    pub fn finish(self) -> CsrMatrix {
        CsrMatrix {
            nrows: self.row_ptr.len() - 1,
            ncols: self.ncols,
            row_ptr: self.row_ptr,
            col_idx: self.col_idx,
            values: self.values,
        }
    }
}
