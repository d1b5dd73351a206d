use std::ops::Index;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CcaError, Result};
use crate::scalar::{axpy, dot, Real};

/// Work (in multiply-adds) below which column loops stay on the calling thread.
pub(crate) const PAR_THRESHOLD: usize = 1 << 16;

/// Column-major dense real matrix.
///
/// All public constructors reject NaN and infinite entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CcaError::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(CcaError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: &[T]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(CcaError::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let mut out = Vec::with_capacity(data.len());
        for j in 0..cols {
            out.extend((0..rows).map(|i| data[i * cols + j]));
        }
        Self::from_col_major(rows, cols, out)
    }

    /// Builds a matrix from nested row slices; rows must all have the same length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut flat = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(CcaError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            flat.extend_from_slice(r);
        }
        Self::from_row_major(rows.len(), cols, &flat)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self::from_col_major(rows, cols, data)
    }

    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(CcaError::DimensionMismatch(format!(
                    "column {j} has {} entries, expected {rows}",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Self::from_col_major(rows, columns.len(), data)
    }

    /// Kernel-internal constructor; callers guarantee `data.len() == rows * cols`.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn diagonal(values: &[T]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[j * self.rows + i] = value;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.rows.max(1)).take(self.cols)
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.data[i * self.cols + j] = self.data[j * self.rows + i];
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
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Self::from_raw(self.rows, self.cols + other.cols, data))
    }

    /// First `k` columns.
    pub fn leading_columns(&self, k: usize) -> Self {
        let k = k.min(self.cols);
        Self::from_raw(self.rows, k, self.data[..k * self.rows].to_vec())
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.rows) {
            return Err(CcaError::IndexOutOfRange {
                index: bad,
                len: self.rows,
            });
        }
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for c in self.columns() {
            data.extend(rows.iter().map(|&i| c[i]));
        }
        Ok(Self::from_raw(rows.len(), self.cols, data))
    }

    /// Appends zero rows until the matrix has `rows` rows.
    pub fn pad_rows(&self, rows: usize) -> Self {
        assert!(rows >= self.rows, "padding cannot shrink a matrix");
        let mut data = Vec::with_capacity(rows * self.cols);
        for c in self.columns() {
            data.extend_from_slice(c);
            data.extend(std::iter::repeat_n(T::zero(), rows - self.rows));
        }
        Self::from_raw(rows, self.cols, data)
    }

    pub fn scale(&self, alpha: T) -> Self {
        Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|&x| x * alpha).collect(),
        )
    }

    pub fn scale_columns(&self, factors: &[T]) -> Self {
        assert_eq!(factors.len(), self.cols);
        let mut out = self.clone();
        for (j, &f) in factors.iter().enumerate() {
            out.col_mut(j).iter_mut().for_each(|x| *x *= f);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        ))
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(CcaError::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> T {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(CcaError::DimensionMismatch(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let m = self.rows;
        let mut out = Self::zeros(m, other.cols);
        if m == 0 {
            return Ok(out);
        }
        let kernel = |(j, out_col): (usize, &mut [T])| {
            for (k, &w) in other.col(j).iter().enumerate() {
                if w != T::zero() {
                    axpy(w, self.col(k), out_col);
                }
            }
        };
        if m * self.cols * other.cols < PAR_THRESHOLD {
            out.data.chunks_mut(m).enumerate().for_each(kernel);
        } else {
            out.data.par_chunks_mut(m).enumerate().for_each(kernel);
        }
        Ok(out)
    }

    /// `selfᵀ * other`.
    pub fn t_matmul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(CcaError::DimensionMismatch(format!(
                "cannot form AᵀB for {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let n = self.cols;
        let mut out = Self::zeros(n, other.cols);
        if n == 0 {
            return Ok(out);
        }
        let kernel = |(j, out_col): (usize, &mut [T])| {
            let b = other.col(j);
            for (i, o) in out_col.iter_mut().enumerate() {
                *o = dot(self.col(i), b);
            }
        };
        if self.rows * n * other.cols < PAR_THRESHOLD {
            out.data.chunks_mut(n).enumerate().for_each(kernel);
        } else {
            out.data.par_chunks_mut(n).enumerate().for_each(kernel);
        }
        Ok(out)
    }

    /// `self * otherᵀ`.
    pub fn matmul_t(&self, other: &Self) -> Result<Self> {
        self.matmul(&other.transpose())
    }

    /// `selfᵀ * self`, computing the upper triangle only.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut out = Self::zeros(n, n);
        let kernel = |(j, out_col): (usize, &mut [T])| {
            let b = self.col(j);
            for (i, o) in out_col.iter_mut().enumerate().take(j + 1) {
                *o = dot(self.col(i), b);
            }
        };
        if self.rows * n * n < 2 * PAR_THRESHOLD {
            out.data.chunks_mut(n.max(1)).enumerate().for_each(kernel);
        } else {
            out.data.par_chunks_mut(n).enumerate().for_each(kernel);
        }
        for j in 0..n {
            for i in j + 1..n {
                out.data[j * n + i] = out.data[i * n + j];
            }
        }
        out
    }

    pub fn mat_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(CcaError::DimensionMismatch(format!(
                "vector of length {} for {} columns",
                x.len(),
                self.cols
            )));
        }
        let mut y = vec![T::zero(); self.rows];
        for (j, &w) in x.iter().enumerate() {
            axpy(w, self.col(j), &mut y);
        }
        Ok(y)
    }
}

impl<T: Real> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[j * self.rows + i]
    }
}
