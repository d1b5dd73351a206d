//! Matrix storage, file formats and the dense factorization kernel.

mod dense;
pub mod io;
pub mod linalg;
mod sparse;

pub use dense::DenseMatrix;
pub use linalg::{
    condition_number, default_rank_tol, numerical_rank, orthonormal_basis, orthonormality_defect,
    pseudo_inverse, singular_values, spectral_norm, thin_q, thin_svd, ThinSvd,
};
pub use sparse::SparseMatrix;

use crate::scalar::Real;

/// Borrowed dense-or-sparse input accepted by the sketching entry points.
#[derive(Clone, Copy, Debug)]
pub enum MatrixRef<'a, T> {
    Dense(&'a DenseMatrix<T>),
    Sparse(&'a SparseMatrix<T>),
}

impl<'a, T: Real> MatrixRef<'a, T> {
    pub fn rows(&self) -> usize {
        match self {
            MatrixRef::Dense(d) => d.rows(),
            MatrixRef::Sparse(s) => s.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            MatrixRef::Dense(d) => d.cols(),
            MatrixRef::Sparse(s) => s.cols(),
        }
    }

    pub fn matmul(&self, x: &DenseMatrix<T>) -> crate::error::Result<DenseMatrix<T>> {
        match self {
            MatrixRef::Dense(d) => d.matmul(x),
            MatrixRef::Sparse(s) => s.matmul_dense(x),
        }
    }

    /// `Mᵀ M` for the underlying matrix.
    pub fn gram(&self) -> DenseMatrix<T> {
        match self {
            MatrixRef::Dense(d) => d.gram(),
            MatrixRef::Sparse(s) => s.gram(),
        }
    }

    pub fn to_dense(&self) -> std::borrow::Cow<'a, DenseMatrix<T>> {
        match *self {
            MatrixRef::Dense(d) => std::borrow::Cow::Borrowed(d),
            MatrixRef::Sparse(s) => std::borrow::Cow::Owned(s.to_dense()),
        }
    }
}

impl<'a, T> From<&'a DenseMatrix<T>> for MatrixRef<'a, T> {
    fn from(m: &'a DenseMatrix<T>) -> Self {
        MatrixRef::Dense(m)
    }
}

impl<'a, T> From<&'a SparseMatrix<T>> for MatrixRef<'a, T> {
    fn from(m: &'a SparseMatrix<T>) -> Self {
        MatrixRef::Sparse(m)
    }
}
