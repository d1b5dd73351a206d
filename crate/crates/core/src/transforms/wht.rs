//! Normalized Walsh–Hadamard transform (Sylvester ordering).
//!
//! `H_m = [[H, H], [H, -H]]` with `H_1 = [1]`, scaled by `m^{-1/2}` so that
//! the transform is symmetric and orthogonal.

use rayon::prelude::*;

use crate::error::{CcaError, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::Real;

/// How a row subset of `H X` is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WhtStrategy {
    /// Recursion that only descends into halves containing requested rows.
    #[default]
    Pruned,
    /// Full transform followed by row selection (reference path).
    FullThenSelect,
}

fn check_power_of_two(m: usize) -> Result<()> {
    if m == 0 || !m.is_power_of_two() {
        return Err(CcaError::NotPowerOfTwo { rows: m });
    }
    Ok(())
}

/// Unnormalized in-place butterfly.
pub(crate) fn fwht_unnormalized<T: Real>(x: &mut [T]) {
    let m = x.len();
    let mut h = 1;
    while h < m {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
}

/// `x ← H x` for one column.
pub fn wht_vector<T: Real>(x: &mut [T]) -> Result<()> {
    check_power_of_two(x.len())?;
    fwht_unnormalized(x);
    let s = T::one() / T::usize(x.len()).sqrt();
    x.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

/// `X ← H X`, column by column.
pub fn wht_in_place<T: Real>(x: &mut DenseMatrix<T>) -> Result<()> {
    let m = x.rows();
    check_power_of_two(m)?;
    let s = T::one() / T::usize(m).sqrt();
    x.as_mut_slice().par_chunks_mut(m).for_each(|c| {
        fwht_unnormalized(c);
        c.iter_mut().for_each(|v| *v *= s);
    });
    Ok(())
}

/// Rows `rows` (sorted ascending, distinct, all `< x.len()`) of the
/// unnormalized `H_m x`, written to `out`. `scratch` needs `x.len()` slots.
pub(crate) fn pruned_unnormalized<T: Real>(
    x: &[T],
    rows: &[usize],
    base: usize,
    out: &mut [T],
    scratch: &mut [T],
) {
    let len = x.len();
    debug_assert_eq!(rows.len(), out.len());
    if rows.is_empty() {
        return;
    }
    if len == 1 {
        out[0] = x[0];
        return;
    }
    if rows.len() == len {
        let buf = &mut scratch[..len];
        buf.copy_from_slice(x);
        fwht_unnormalized(buf);
        out.copy_from_slice(buf);
        return;
    }
    let half = len / 2;
    let split = rows.partition_point(|&r| r - base < half);
    let (lo, hi) = x.split_at(half);
    let (buf, rest) = scratch.split_at_mut(half);
    let (out_lo, out_hi) = out.split_at_mut(split);
    if split > 0 {
        for ((b, &u), &v) in buf.iter_mut().zip(lo).zip(hi) {
            *b = u + v;
        }
        pruned_unnormalized(buf, &rows[..split], base, out_lo, rest);
    }
    if split < rows.len() {
        for ((b, &u), &v) in buf.iter_mut().zip(lo).zip(hi) {
            *b = u - v;
        }
        pruned_unnormalized(buf, &rows[split..], base + half, out_hi, rest);
    }
}

fn sorted_request(rows: &[usize], m: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by_key(|&k| rows[k]);
    let sorted: Vec<usize> = order.iter().map(|&k| rows[k]).collect();
    if let Some(&bad) = sorted.iter().find(|&&r| r >= m) {
        return Err(CcaError::IndexOutOfRange { index: bad, len: m });
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(CcaError::DimensionMismatch("duplicate row in sample set".into()));
    }
    Ok((sorted, order))
}

/// Rows `rows` of `H X` (no rescaling). Output row `k` is row `rows[k]`.
pub fn subsampled_wht<T: Real>(x: &DenseMatrix<T>, rows: &[usize]) -> Result<DenseMatrix<T>> {
    subsampled_wht_with(x, rows, WhtStrategy::Pruned)
}

pub fn subsampled_wht_with<T: Real>(
    x: &DenseMatrix<T>,
    rows: &[usize],
    strategy: WhtStrategy,
) -> Result<DenseMatrix<T>> {
    let m = x.rows();
    check_power_of_two(m)?;
    let (sorted, order) = sorted_request(rows, m)?;
    let r = rows.len();
    let norm = T::one() / T::usize(m).sqrt();

    let sorted_out = match strategy {
        WhtStrategy::FullThenSelect => {
            let mut full = x.clone();
            wht_in_place(&mut full)?;
            full.select_rows(&sorted)?
        }
        WhtStrategy::Pruned => {
            let mut out = DenseMatrix::zeros(r, x.cols());
            if r > 0 {
                out.as_mut_slice()
                    .par_chunks_mut(r)
                    .enumerate()
                    .for_each_init(
                        || vec![T::zero(); m],
                        |scratch, (j, dst)| {
                            pruned_unnormalized(x.col(j), &sorted, 0, dst, scratch);
                            dst.iter_mut().for_each(|v| *v *= norm);
                        },
                    );
            }
            out
        }
    };

    let mut result = DenseMatrix::zeros(r, x.cols());
    for j in 0..x.cols() {
        let src = sorted_out.col(j);
        let dst = result.col_mut(j);
        for (pos, &k) in order.iter().enumerate() {
            dst[k] = src[pos];
        }
    }
    Ok(result)
}
