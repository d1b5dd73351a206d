use serde::Serialize;

use crate::error::{CcaError, Result};
use crate::matrix::{thin_svd, DenseMatrix};
use crate::scalar::{dot, Real};

/// Squared row norms of an orthonormal basis of the column space.
pub fn leverage_scores<T: Real>(x: &DenseMatrix<T>, rank_tol: Option<T>) -> Result<Vec<T>> {
    let svd = thin_svd(x, rank_tol)?;
    if svd.rank() == 0 {
        return Err(CcaError::RankZero { which: "X" });
    }
    let u = &svd.u;
    let mut scores = vec![T::zero(); u.rows()];
    for c in u.columns() {
        for (s, &v) in scores.iter_mut().zip(c) {
            *s += v * v;
        }
    }
    Ok(scores)
}

/// `μ(X) = max_i ‖e_iᵀ U_X‖²`, always within `[rank/m, 1]`.
pub fn coherence<T: Real>(x: &DenseMatrix<T>, rank_tol: Option<T>) -> Result<T> {
    Ok(leverage_scores(x, rank_tol)?
        .into_iter()
        .fold(T::zero(), |m, s| m.max(s)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConcatCoherence<T> {
    /// `μ([A ; B])`
    pub coherence: T,
    /// `ω = rank([A ; B])`
    pub rank: usize,
}

pub fn concat_coherence<T: Real>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    rank_tol: Option<T>,
) -> Result<ConcatCoherence<T>> {
    let c = a.hcat(b)?;
    let svd = thin_svd(&c, rank_tol)?;
    if svd.rank() == 0 {
        return Err(CcaError::RankZero { which: "[A ; B]" });
    }
    let u = &svd.u;
    let coherence = (0..u.rows())
        .map(|i| {
            let row = u.row(i);
            dot(&row, &row)
        })
        .fold(T::zero(), |m, s| m.max(s));
    Ok(ConcatCoherence {
        coherence,
        rank: svd.rank(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_matrix, stream_rng};
    use crate::transforms::wht_in_place;

    #[test]
    fn identity_block_is_maximally_coherent() {
        let x = DenseMatrix::<f64>::identity(3).pad_rows(10);
        assert!((coherence(&x, None).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hadamard_columns_are_flat() {
        // first n columns of the normalized H_m: every leverage score is n/m
        let (m, n) = (32, 4);
        let mut h = DenseMatrix::<f64>::identity(m);
        wht_in_place(&mut h).unwrap();
        let x = h.leading_columns(n);
        let mu = coherence(&x, None).unwrap();
        assert!((mu - n as f64 / m as f64).abs() < 1e-13);
    }

    #[test]
    fn ones_column_has_coherence_one_over_m() {
        let x = DenseMatrix::from_fn(16, 3, |_, j| (j + 1) as f64).unwrap();
        assert!((coherence(&x, None).unwrap() - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn concat_of_duplicate_equals_single() {
        let a = gaussian_matrix::<f64>(30, 3, &mut stream_rng(1, 0));
        let cc = concat_coherence(&a, &a, None).unwrap();
        assert_eq!(cc.rank, 3);
        assert!((cc.coherence - coherence(&a, None).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn disjoint_identity_blocks() {
        let a = DenseMatrix::<f64>::identity(2).pad_rows(6);
        let mut b = DenseMatrix::<f64>::zeros(6, 2);
        b.set(3, 0, 1.0);
        b.set(4, 1, 1.0);
        let cc = concat_coherence(&a, &b, None).unwrap();
        assert_eq!(cc.rank, 4);
        assert!((cc.coherence - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix_is_an_error() {
        let z = DenseMatrix::<f64>::zeros(5, 2);
        assert!(matches!(coherence(&z, None), Err(CcaError::RankZero { .. })));
    }
}
