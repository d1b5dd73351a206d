#![allow(dead_code)]

use fastcca::rng::{gaussian_matrix, stream_rng};
use fastcca::DenseMatrix;
use nalgebra::{DMatrix, SymmetricEigen};

pub fn to_na(x: &DenseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(x.rows(), x.cols(), x.as_slice())
}

pub fn from_na(x: &DMatrix<f64>) -> DenseMatrix<f64> {
    DenseMatrix::from_col_major(x.nrows(), x.ncols(), x.as_slice().to_vec()).unwrap()
}

pub fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix<f64> {
    gaussian_matrix(m, n, &mut stream_rng(seed, 100))
}

/// Canonical correlations from the symmetric generalized eigenproblem
/// `L_a⁻¹ AᵀB (BᵀB)⁻¹ BᵀA L_a⁻ᵀ`, with `AᵀA = L_a L_aᵀ`.
pub fn eigen_correlations(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> Vec<f64> {
    let (a, b) = (to_na(a), to_na(b));
    let saa = a.transpose() * &a;
    let sbb = b.transpose() * &b;
    let sab = a.transpose() * &b;
    let la = saa.cholesky().expect("full column rank").l();
    let la_inv = la.try_inverse().unwrap();
    let sbb_inv = sbb.try_inverse().unwrap();
    let k = &la_inv * &sab * sbb_inv * sab.transpose() * la_inv.transpose();
    let k = (&k + k.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(k).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev.truncate(a.ncols().min(b.ncols()));
    ev.into_iter().map(|v| v.max(0.0).sqrt().min(1.0)).collect()
}

/// Random orthogonal `m × m` matrix from the QR factorization of a Gaussian matrix.
pub fn random_orthogonal(m: usize, seed: u64) -> DenseMatrix<f64> {
    let g = to_na(&gaussian(m, m, seed));
    from_na(&g.qr().q())
}

pub fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
