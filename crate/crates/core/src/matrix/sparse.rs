use serde::{Deserialize, Serialize};

use crate::error::{CcaError, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::Real;

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within a row and stored values are nonzero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix<T> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> SparseMatrix<T> {
    /// Assembles from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that end up zero are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        for &(i, j, v) in &entries {
            if i >= rows {
                return Err(CcaError::IndexOutOfRange { index: i, len: rows });
            }
            if j >= cols {
                return Err(CcaError::IndexOutOfRange { index: j, len: cols });
            }
            if !v.is_finite() {
                return Err(CcaError::NonFinite);
            }
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().expect("previous entry") += v;
                continue;
            }
            if let Some((pi, _)) = last {
                if values.last().is_some_and(|x| *x == T::zero()) {
                    values.pop();
                    col_idx.pop();
                    row_ptr[pi + 1] -= 1;
                }
            }
            last = Some((i, j));
            col_idx.push(j);
            values.push(v);
            row_ptr[i + 1] += 1;
        }
        if let Some((pi, _)) = last {
            if values.last().is_some_and(|x| *x == T::zero()) {
                values.pop();
                col_idx.pop();
                row_ptr[pi + 1] -= 1;
            }
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_dense(dense: &DenseMatrix<T>) -> Self {
        let mut row_ptr = Vec::with_capacity(dense.rows() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..dense.rows() {
            for j in 0..dense.cols() {
                let v = dense.get(i, j);
                if v != T::zero() {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: dense.rows(),
            cols: dense.cols(),
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values stored in row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            out.set(i, j, v);
        }
        out
    }

    /// `self · x` for a dense right factor.
    pub fn matmul_dense(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if x.rows() != self.cols {
            return Err(CcaError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows,
                self.cols,
                x.rows(),
                x.cols()
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, x.cols());
        for k in 0..x.cols() {
            let src = x.col(k);
            let dst = out.col_mut(k);
            for (i, d) in dst.iter_mut().enumerate() {
                let (cols, vals) = self.row(i);
                *d = cols.iter().zip(vals).map(|(&j, &v)| v * src[j]).sum();
            }
        }
        Ok(out)
    }

    /// `selfᵀ * self` accumulated row by row.
    pub fn gram(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (a, (&j, &v)) in cols.iter().zip(vals).enumerate() {
                for (&k, &w) in cols[a..].iter().zip(&vals[a..]) {
                    out.set(j, k, out.get(j, k) + v * w);
                }
            }
        }
        for j in 0..self.cols {
            for k in j + 1..self.cols {
                out.set(k, j, out.get(j, k));
            }
        }
        out
    }

    /// Column concatenation `[self ; other]`.
    pub fn hcat(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(CcaError::RowCountMismatch {
                a: self.rows,
                b: other.rows,
            });
        }
        let shifted = other.triplets().map(|(i, j, v)| (i, j + self.cols, v));
        Self::from_triplets(self.rows, self.cols + other.cols, self.triplets().chain(shifted))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_canonicalized() {
        let s = SparseMatrix::from_triplets(
            3,
            3,
            vec![(2, 1, 1.0), (0, 2, 2.0), (0, 0, 1.0), (2, 1, 2.0), (1, 1, 1.0), (1, 1, -1.0)],
        )
        .unwrap();
        assert_eq!(s.nnz(), 3);
        assert_eq!(s.row(0), (&[0usize, 2][..], &[1.0, 2.0][..]));
        assert_eq!(s.row(1).0.len(), 0);
        assert_eq!(s.row(2), (&[1usize][..], &[3.0][..]));
    }

    #[test]
    fn dense_round_trip() {
        let d = DenseMatrix::from_rows(&[[0.0, 1.5], [0.0, 0.0], [-2.0, 0.0]]).unwrap();
        let s = SparseMatrix::from_dense(&d);
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.to_dense(), d);
    }

    #[test]
    fn gram_matches_dense() {
        let d = DenseMatrix::from_rows(&[[1.0, 0.0, 2.0], [0.0, -1.0, 3.0], [4.0, 0.0, 0.0]]).unwrap();
        assert_eq!(SparseMatrix::from_dense(&d).gram(), d.gram());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, vec![(0, 5, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, 2, vec![(0, 0, f64::INFINITY)]).is_err());
    }
}
