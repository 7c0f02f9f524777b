use rayon::prelude::*;

use super::{DenseMatrix, PAR_THRESHOLD};
use crate::error::{Result, SgclError};

/// Compressed-sparse-row real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != rows + 1
            || row_offsets[0] != 0
            || row_offsets[rows] != col_indices.len()
            || col_indices.len() != values.len()
            || row_offsets.windows(2).any(|w| w[0] > w[1])
        {
            return Err(SgclError::shape("csr", "inconsistent row offsets"));
        }
        if let Some(&c) = col_indices.iter().find(|&&c| c >= cols) {
            return Err(SgclError::shape(
                "csr",
                format!("column {c} outside {cols} columns"),
            ));
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_offsets = vec![0usize; rows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(SgclError::shape(
                    "from_triplets",
                    format!("entry ({r},{c}) outside {rows}x{cols}"),
                ));
            }
            if last == Some((r, c)) {
                *values.last_mut().expect("previous entry") += v;
                continue;
            }
            last = Some((r, c));
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
        }
        for r in 0..rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Self::new(rows, cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(col, value)` pairs of row `r`.
    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row_entries(r) {
                out[(r, c)] += v;
            }
        }
        out
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.rows {
            for (c, v) in self.row_entries(r) {
                let slot = next[c];
                col_indices[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            rows: self.cols,
            cols: self.rows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    /// Sparse–dense product `self · dense`.
    pub fn spmm(&self, dense: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != dense.rows() {
            return Err(SgclError::shape(
                "spmm",
                format!("{}x{} sparse with {:?} dense", self.rows, self.cols, dense.shape()),
            ));
        }
        let d = dense.cols();
        let mut out = DenseMatrix::zeros(self.rows, d);
        if d == 0 {
            return Ok(out);
        }
        let kernel = |(r, out_row): (usize, &mut [f64])| {
            for (c, v) in self.row_entries(r) {
                for (o, x) in out_row.iter_mut().zip(dense.row(c)) {
                    *o += v * x;
                }
            }
        };
        if self.nnz() * d < PAR_THRESHOLD {
            out.as_mut_slice().chunks_mut(d).enumerate().for_each(kernel);
        } else {
            out.as_mut_slice()
                .par_chunks_mut(d)
                .enumerate()
                .for_each(kernel);
        }
        Ok(out)
    }

    /// `selfᵀ · dense`, used by the backward pass of propagation.
    pub fn spmm_transpose(&self, dense: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != dense.rows() {
            return Err(SgclError::shape(
                "spmm_transpose",
                format!("{}x{} sparse (transposed) with {:?} dense", self.rows, self.cols, dense.shape()),
            ));
        }
        self.transpose().spmm(dense)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols && self.to_dense().max_abs_diff(&self.transpose().to_dense()) <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_sparse(n: usize, density: f64, rng: &mut impl Rng) -> CsrMatrix {
        let mut t = Vec::new();
        for r in 0..n {
            for c in 0..n {
                if rng.random_bool(density) {
                    t.push((r, c, rng.random_range(-1.0..1.0)));
                }
            }
        }
        CsrMatrix::from_triplets(n, n, t).unwrap()
    }

    #[test]
    fn identity_spmm_returns_input() {
        let x = DenseMatrix::from_fn(5, 3, |i, j| (i * 3 + j) as f64 - 4.5);
        assert_eq!(CsrMatrix::identity(5).spmm(&x).unwrap(), x);
    }

    #[test]
    fn empty_sparse_annihilates() {
        let s = CsrMatrix::from_triplets(4, 4, vec![]).unwrap();
        let x = DenseMatrix::filled(4, 2, 3.0);
        assert_eq!(s.spmm(&x).unwrap(), DenseMatrix::zeros(4, 2));
    }

    #[test]
    fn random_8x8_matches_dense_product() {
        let mut rng = crate::seeded_rng(11);
        let s = random_sparse(8, 0.3, &mut rng);
        let x = DenseMatrix::from_fn(8, 3, |_, _| rng.random_range(-2.0..2.0));
        let expect = s.to_dense().matmul(&x).unwrap();
        assert!(s.spmm(&x).unwrap().max_abs_diff(&expect) <= 1e-12);
        let expect_t = s.to_dense().t_matmul(&x).unwrap();
        assert!(s.spmm_transpose(&x).unwrap().max_abs_diff(&expect_t) <= 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let s = CsrMatrix::identity(3);
        assert!(matches!(
            s.spmm(&DenseMatrix::zeros(4, 2)),
            Err(SgclError::Shape { .. })
        ));
    }

    #[test]
    fn triplet_duplicates_are_summed() {
        let s = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.to_dense()[(0, 1)], 3.0);
    }
}
