use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CcaError, Result};
use crate::matrix::linalg::{jacobi_svd, svd_untruncated, HouseholderQr};
use crate::matrix::{thin_svd, DenseMatrix};
use crate::scalar::Real;

/// Which solver produced a [`CcaResult`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Srht,
    CountSketch,
    Uniform,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Srht => "srht",
            Method::CountSketch => "countsketch",
            Method::Uniform => "uniform",
        })
    }
}

/// Canonical correlations and weights of a pair `(A, B)`.
///
/// Column `i` of `weights_a` maps `A` to its `i`-th canonical vector, so
/// `A · weights_a` has unit-norm orthogonal columns for the exact method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcaResult<T> {
    pub correlations: Vec<T>,
    pub weights_a: DenseMatrix<T>,
    pub weights_b: DenseMatrix<T>,
    pub rank_a: usize,
    pub rank_b: usize,
    pub method: Method,
}

impl<T: Real> CcaResult<T> {
    /// Number of canonical pairs, `min(rank A, rank B)`.
    pub fn len(&self) -> usize {
        self.correlations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.correlations.is_empty()
    }

    pub fn canonical_vectors_a(&self, a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        a.matmul(&self.weights_a)
    }

    pub fn canonical_vectors_b(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        b.matmul(&self.weights_b)
    }
}

/// How orthonormal bases of the two ranges are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BasisMethod {
    /// Left singular vectors `U_A`, `U_B`.
    #[default]
    Svd,
    /// Householder `Q`; falls back to the SVD basis when `R` is numerically singular.
    Qr,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ExactOptions<T> {
    /// Relative rank tolerance; `None` means `eps · max(m, n)`.
    pub rank_tol: Option<T>,
    pub basis: BasisMethod,
}

/// Orthonormal basis `U` of a range plus coefficients `C` with `X C = U`.
struct RangeBasis<T> {
    basis: DenseMatrix<T>,
    coef: DenseMatrix<T>,
}

fn range_basis<T: Real>(x: &DenseMatrix<T>, opts: &ExactOptions<T>) -> Result<RangeBasis<T>> {
    if opts.basis == BasisMethod::Qr && x.rows() >= x.cols() {
        let qr = HouseholderQr::new(x);
        let r = qr.r();
        let sv = jacobi_svd(&r, false).sigma;
        let tol = opts
            .rank_tol
            .unwrap_or_else(|| crate::matrix::default_rank_tol(x.rows(), x.cols()));
        if sv[0] > T::zero() && sv.iter().all(|&s| s > tol * sv[0]) {
            let basis = qr.apply_q(&DenseMatrix::identity(x.cols()));
            return Ok(RangeBasis {
                basis,
                coef: upper_triangular_inverse(&r),
            });
        }
    }
    let svd = thin_svd(x, opts.rank_tol)?;
    let inv: Vec<T> = svd.singular_values.iter().map(|&s| T::one() / s).collect();
    Ok(RangeBasis {
        coef: svd.v.scale_columns(&inv),
        basis: svd.u,
    })
}

fn upper_triangular_inverse<T: Real>(r: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = r.rows();
    let mut inv = DenseMatrix::zeros(n, n);
    for j in 0..n {
        // solve R x = e_j by back substitution
        let col = inv.col_mut(j);
        for i in (0..=j).rev() {
            let mut s = if i == j { T::one() } else { T::zero() };
            for k in i + 1..=j {
                s -= r.get(i, k) * col[k];
            }
            col[i] = s / r.get(i, i);
        }
    }
    inv
}

/// Exact CCA by the Björck–Golub method with SVD bases.
pub fn exact_cca<T: Real>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    rank_tol: Option<T>,
) -> Result<CcaResult<T>> {
    exact_cca_with(
        a,
        b,
        &ExactOptions {
            rank_tol,
            basis: BasisMethod::Svd,
        },
    )
}

pub fn exact_cca_with<T: Real>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    opts: &ExactOptions<T>,
) -> Result<CcaResult<T>> {
    if a.rows() != b.rows() {
        return Err(CcaError::RowCountMismatch {
            a: a.rows(),
            b: b.rows(),
        });
    }
    if a.is_empty() || b.is_empty() {
        return Err(CcaError::EmptyMatrix);
    }
    let ra = range_basis(a, opts)?;
    let rb = range_basis(b, opts)?;
    if ra.basis.cols() == 0 {
        return Err(CcaError::RankZero { which: "A" });
    }
    if rb.basis.cols() == 0 {
        return Err(CcaError::RankZero { which: "B" });
    }
    // Keep rank(first) >= rank(second) while solving, then restore the caller's order.
    if ra.basis.cols() >= rb.basis.cols() {
        bjorck_golub(&ra, &rb)
    } else {
        let swapped = bjorck_golub(&rb, &ra)?;
        Ok(CcaResult {
            correlations: swapped.correlations,
            weights_a: swapped.weights_b,
            weights_b: swapped.weights_a,
            rank_a: swapped.rank_b,
            rank_b: swapped.rank_a,
            method: Method::Exact,
        })
    }
}

fn bjorck_golub<T: Real>(ra: &RangeBasis<T>, rb: &RangeBasis<T>) -> Result<CcaResult<T>> {
    let (p, q) = (ra.basis.cols(), rb.basis.cols());
    debug_assert!(p >= q);
    let cross = ra.basis.t_matmul(&rb.basis)?;
    let inner = svd_untruncated(&cross);
    let correlations = inner
        .sigma
        .iter()
        .map(|&s| s.max(T::zero()).min(T::one()))
        .collect();
    Ok(CcaResult {
        correlations,
        weights_a: ra.coef.matmul(&inner.u.leading_columns(q))?,
        weights_b: rb.coef.matmul(&inner.v)?,
        rank_a: p,
        rank_b: q,
        method: Method::Exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::orthonormality_defect;
    use crate::rng::{gaussian_matrix, stream_rng};

    fn random(m: usize, n: usize, seed: u64) -> DenseMatrix<f64> {
        gaussian_matrix(m, n, &mut stream_rng(seed, 0))
    }

    #[test]
    fn identical_matrices_are_fully_correlated() {
        let a = random(30, 4, 1);
        let res = exact_cca(&a, &a, None).unwrap();
        assert_eq!(res.len(), 4);
        assert!(res.correlations.iter().all(|&s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn orthogonal_ranges_have_zero_correlation() {
        let mut a = DenseMatrix::<f64>::zeros(4, 1);
        a.set(0, 0, 1.0);
        let mut b = DenseMatrix::<f64>::zeros(4, 1);
        b.set(1, 0, 1.0);
        let res = exact_cca(&a, &b, None).unwrap();
        assert_eq!(res.correlations, vec![0.0]);
        // the canonical vector still has unit norm
        let av = res.canonical_vectors_a(&a).unwrap();
        assert!((av.frobenius_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn canonical_vectors_are_orthonormal_and_correlate_diagonally() {
        let a = random(40, 5, 2);
        let b = random(40, 3, 3);
        let res = exact_cca(&a, &b, None).unwrap();
        assert_eq!((res.rank_a, res.rank_b), (5, 3));
        let av = res.canonical_vectors_a(&a).unwrap();
        let bv = res.canonical_vectors_b(&b).unwrap();
        assert!(orthonormality_defect(&av) < 1e-10);
        assert!(orthonormality_defect(&bv) < 1e-10);
        let cross = av.t_matmul(&bv).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { res.correlations[i] } else { 0.0 };
                assert!((cross.get(i, j).abs() - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rank_order_is_restored_after_swap() {
        let a = random(25, 2, 4);
        let b = random(25, 6, 5);
        let res = exact_cca(&a, &b, None).unwrap();
        assert_eq!(res.weights_a.shape(), (2, 2));
        assert_eq!(res.weights_b.shape(), (6, 2));
        assert_eq!((res.rank_a, res.rank_b), (2, 6));
        let flipped = exact_cca(&b, &a, None).unwrap();
        for (x, y) in res.correlations.iter().zip(&flipped.correlations) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn qr_basis_agrees_with_svd_basis() {
        let a = random(60, 6, 6);
        let b = random(60, 4, 7);
        let svd = exact_cca(&a, &b, None).unwrap();
        let qr = exact_cca_with(
            &a,
            &b,
            &ExactOptions {
                rank_tol: None,
                basis: BasisMethod::Qr,
            },
        )
        .unwrap();
        for (x, y) in svd.correlations.iter().zip(&qr.correlations) {
            assert!((x - y).abs() < 1e-12);
        }
        let av = qr.canonical_vectors_a(&a).unwrap();
        assert!(orthonormality_defect(&av) < 1e-10);
    }

    #[test]
    fn error_paths() {
        let a = random(10, 2, 1);
        let b = random(9, 2, 2);
        assert!(matches!(exact_cca(&a, &b, None), Err(CcaError::RowCountMismatch { a: 10, b: 9 })));
        let z = DenseMatrix::<f64>::zeros(10, 2);
        assert!(matches!(exact_cca(&a, &z, None), Err(CcaError::RankZero { which: "B" })));
        assert!(matches!(exact_cca(&z, &a, None), Err(CcaError::RankZero { which: "A" })));
        let e = DenseMatrix::<f64>::zeros(10, 0);
        assert!(matches!(exact_cca(&a, &e, None), Err(CcaError::EmptyMatrix)));
    }
}
