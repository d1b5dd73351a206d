//! Dense factorization kernels: Householder QR, one-sided Jacobi SVD, and the
//! thin SVD / pseudo-inverse / norm helpers built on them.
//!
//! A tall matrix is first reduced to its triangular factor `R`; the small
//! `n x n` problem is then solved by Hestenes' one-sided Jacobi method, which
//! yields singular values to high relative accuracy.

use rayon::prelude::*;

use crate::error::{CcaError, Result};
use crate::matrix::dense::PAR_THRESHOLD;
use crate::matrix::DenseMatrix;
use crate::scalar::{axpy, dot, norm2, Real};

const MAX_SWEEPS: usize = 80;

/// Compact SVD `X = U diag(σ) Vᵀ` truncated to the numerical rank.
#[derive(Clone, Debug)]
pub struct ThinSvd<T> {
    pub u: DenseMatrix<T>,
    pub singular_values: Vec<T>,
    pub v: DenseMatrix<T>,
}

impl<T: Real> ThinSvd<T> {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix<T> {
        self.u
            .scale_columns(&self.singular_values)
            .matmul_t(&self.v)
            .expect("consistent factor shapes")
    }
}

/// Householder QR in LAPACK `geqr2` layout: `R` on and above the diagonal,
/// reflector tails below it, implicit unit leading entries.
pub(crate) struct HouseholderQr<T> {
    factors: DenseMatrix<T>,
    tau: Vec<T>,
}

impl<T: Real> HouseholderQr<T> {
    /// Requires `rows >= cols`.
    pub(crate) fn new(x: &DenseMatrix<T>) -> Self {
        let (m, n) = x.shape();
        debug_assert!(m >= n);
        let mut factors = x.clone();
        let mut tau = vec![T::zero(); n];
        for k in 0..n {
            let data = factors.as_mut_slice();
            let (left, right) = data.split_at_mut((k + 1) * m);
            let col = &mut left[k * m..];
            let alpha = col[k];
            let tail_norm = norm2(&col[k + 1..]);
            if tail_norm == T::zero() {
                continue;
            }
            let mut beta = alpha.hypot(tail_norm);
            if alpha >= T::zero() {
                beta = -beta;
            }
            tau[k] = (beta - alpha) / beta;
            let inv = T::one() / (alpha - beta);
            col[k + 1..].iter_mut().for_each(|x| *x *= inv);
            col[k] = beta;

            let v_tail = &col[k + 1..];
            let t = tau[k];
            let update = |c: &mut [T]| {
                let w = c[k] + dot(v_tail, &c[k + 1..]);
                let s = -(t * w);
                c[k] += s;
                axpy(s, v_tail, &mut c[k + 1..]);
            };
            if (m - k) * (n - k - 1) < PAR_THRESHOLD {
                right.chunks_mut(m).for_each(update);
            } else {
                right.par_chunks_mut(m).for_each(update);
            }
        }
        Self { factors, tau }
    }

    pub(crate) fn r(&self) -> DenseMatrix<T> {
        let n = self.factors.cols();
        DenseMatrix::from_raw(
            n,
            n,
            (0..n)
                .flat_map(|j| (0..n).map(move |i| (i, j)))
                .map(|(i, j)| if i <= j { self.factors.get(i, j) } else { T::zero() })
                .collect(),
        )
    }

    /// Returns `Q [Y; 0]` for `Y` with `cols` rows, i.e. the thin `Q` times `Y`.
    pub(crate) fn apply_q(&self, y: &DenseMatrix<T>) -> DenseMatrix<T> {
        let (m, n) = self.factors.shape();
        debug_assert_eq!(y.rows(), n);
        let mut out = DenseMatrix::zeros(m, y.cols());
        for j in 0..y.cols() {
            out.col_mut(j)[..n].copy_from_slice(y.col(j));
        }
        if m == 0 {
            return out;
        }
        for k in (0..n).rev() {
            let t = self.tau[k];
            if t == T::zero() {
                continue;
            }
            let v_tail = &self.factors.col(k)[k + 1..];
            let update = |c: &mut [T]| {
                let w = c[k] + dot(v_tail, &c[k + 1..]);
                let s = -(t * w);
                c[k] += s;
                axpy(s, v_tail, &mut c[k + 1..]);
            };
            let data = out.as_mut_slice();
            if (m - k) * y.cols() < PAR_THRESHOLD {
                data.chunks_mut(m).for_each(update);
            } else {
                data.par_chunks_mut(m).for_each(update);
            }
        }
        out
    }
}

/// All `cols` singular triplets of a matrix with `rows >= cols`, sorted
/// descending. Left vectors belonging to negligible singular values are
/// completed to an orthonormal set.
pub(crate) struct JacobiSvd<T> {
    pub u: DenseMatrix<T>,
    pub sigma: Vec<T>,
    pub v: DenseMatrix<T>,
}

pub(crate) fn jacobi_svd<T: Real>(x: &DenseMatrix<T>, want_u: bool) -> JacobiSvd<T> {
    let (m, n) = x.shape();
    debug_assert!(m >= n);
    let mut g = x.clone();
    let mut v = DenseMatrix::identity(n);
    let eps = T::epsilon();
    let tol = eps * T::usize(m.max(1)).sqrt();
    let floor = {
        let f = g.frobenius_norm() * eps;
        f * f
    };

    let mut sq: Vec<T> = g.columns().map(|c| dot(c, c)).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n.saturating_sub(1) {
            for j in i + 1..n {
                let (alpha, beta) = (sq[i], sq[j]);
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let gamma = dot(g.col(i), g.col(j));
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut g, i, j, c, s);
                rotate_columns(&mut v, i, j, c, s);
                sq[i] = alpha - t * gamma;
                sq[j] = beta + t * gamma;
            }
        }
        sq = g.columns().map(|c| dot(c, c)).collect();
        if !rotated {
            break;
        }
    }

    let norms: Vec<T> = sq.iter().map(|s| s.sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).expect("finite norms"));
    let sigma: Vec<T> = order.iter().map(|&j| norms[j]).collect();
    let mut v_sorted = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        v_sorted.col_mut(dst).copy_from_slice(v.col(src));
    }

    let u = if want_u {
        let cutoff = sigma.first().copied().unwrap_or(T::zero()) * eps * T::usize(m.max(n));
        let mut u = DenseMatrix::zeros(m, n);
        for (dst, &src) in order.iter().enumerate() {
            let s = norms[src];
            if s > cutoff && s > T::zero() {
                let inv = T::one() / s;
                u.col_mut(dst)
                    .iter_mut()
                    .zip(g.col(src))
                    .for_each(|(o, &x)| *o = x * inv);
            } else {
                let col = complete_basis(&u, dst);
                u.col_mut(dst).copy_from_slice(&col);
            }
        }
        u
    } else {
        DenseMatrix::zeros(m, 0)
    };
    JacobiSvd {
        u,
        sigma,
        v: v_sorted,
    }
}

fn rotate_columns<T: Real>(x: &mut DenseMatrix<T>, i: usize, j: usize, c: T, s: T) {
    let rows = x.rows();
    let data = x.as_mut_slice();
    let (left, right) = data.split_at_mut(j * rows);
    let ci = &mut left[i * rows..(i + 1) * rows];
    let cj = &mut right[..rows];
    for (a, b) in ci.iter_mut().zip(cj.iter_mut()) {
        let (xa, xb) = (*a, *b);
        *a = c * xa - s * xb;
        *b = s * xa + c * xb;
    }
}

/// Unit vector orthogonal to the first `k` columns of `u` (assumed orthonormal).
fn complete_basis<T: Real>(u: &DenseMatrix<T>, k: usize) -> Vec<T> {
    let m = u.rows();
    let mut best: Option<(T, Vec<T>)> = None;
    for t in 0..m {
        let mut w = vec![T::zero(); m];
        w[t] = T::one();
        for _ in 0..2 {
            for c in 0..k {
                let proj = dot(u.col(c), &w);
                axpy(-proj, u.col(c), &mut w);
            }
        }
        let nrm = norm2(&w);
        if best.as_ref().is_none_or(|(b, _)| nrm > *b) {
            best = Some((nrm, w));
        }
        if nrm > T::lit(0.5) {
            break;
        }
    }
    let (nrm, mut w) = best.expect("at least one row");
    w.iter_mut().for_each(|x| *x /= nrm);
    w
}

fn check_input<T: Real>(x: &DenseMatrix<T>) -> Result<()> {
    if x.is_empty() {
        return Err(CcaError::EmptyMatrix);
    }
    if !x.is_finite() {
        return Err(CcaError::NonFinite);
    }
    Ok(())
}

/// Default relative rank tolerance: `eps * max(m, n)`.
pub fn default_rank_tol<T: Real>(rows: usize, cols: usize) -> T {
    T::epsilon() * T::usize(rows.max(cols))
}

/// All `min(m, n)` singular triplets with the left factor of a tall input.
fn full_triplets<T: Real>(x: &DenseMatrix<T>, want_u: bool) -> JacobiSvd<T> {
    let (m, n) = x.shape();
    if m > n {
        let qr = HouseholderQr::new(x);
        let inner = jacobi_svd(&qr.r(), want_u);
        let u = if want_u {
            qr.apply_q(&inner.u)
        } else {
            inner.u
        };
        JacobiSvd {
            u,
            sigma: inner.sigma,
            v: inner.v,
        }
    } else {
        jacobi_svd(x, want_u)
    }
}

/// Thin SVD truncated at `σ_i > rank_tol · σ₁`.
///
/// `rank_tol = None` selects [`default_rank_tol`]. A zero matrix yields rank 0
/// with empty factors.
pub fn thin_svd<T: Real>(x: &DenseMatrix<T>, rank_tol: Option<T>) -> Result<ThinSvd<T>> {
    check_input(x)?;
    let (m, n) = x.shape();
    if m < n {
        let t = thin_svd(&x.transpose(), rank_tol)?;
        return Ok(ThinSvd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(m, n));
    if tol < T::zero() || !tol.is_finite() {
        return Err(CcaError::DimensionMismatch(format!("invalid rank tolerance {tol}")));
    }
    let full = full_triplets(x, true);
    let top = full.sigma[0];
    let rank = full
        .sigma
        .iter()
        .take_while(|&&s| s > T::zero() && s > tol * top)
        .count();
    Ok(ThinSvd {
        u: full.u.leading_columns(rank),
        singular_values: full.sigma[..rank].to_vec(),
        v: full.v.leading_columns(rank),
    })
}

/// Every singular value (`min(m, n)` of them, zeros included), descending.
pub fn singular_values<T: Real>(x: &DenseMatrix<T>) -> Result<Vec<T>> {
    check_input(x)?;
    if x.rows() < x.cols() {
        return Ok(full_triplets(&x.transpose(), false).sigma);
    }
    Ok(full_triplets(x, false).sigma)
}

/// Untruncated compact SVD used where zero singular values still carry
/// meaning (a zero canonical correlation still has canonical vectors).
pub(crate) fn svd_untruncated<T: Real>(x: &DenseMatrix<T>) -> JacobiSvd<T> {
    if x.rows() >= x.cols() {
        full_triplets(x, true)
    } else {
        let t = full_triplets(&x.transpose(), true);
        JacobiSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        }
    }
}

pub fn numerical_rank<T: Real>(x: &DenseMatrix<T>, rank_tol: Option<T>) -> Result<usize> {
    let sv = singular_values(x)?;
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(x.rows(), x.cols()));
    let top = sv[0];
    Ok(sv.iter().take_while(|&&s| s > T::zero() && s > tol * top).count())
}

/// Moore–Penrose pseudo-inverse `V Σ⁻¹ Uᵀ`.
pub fn pseudo_inverse<T: Real>(x: &DenseMatrix<T>, rank_tol: Option<T>) -> Result<DenseMatrix<T>> {
    let svd = thin_svd(x, rank_tol)?;
    if svd.rank() == 0 {
        return Ok(DenseMatrix::zeros(x.cols(), x.rows()));
    }
    let inv: Vec<T> = svd.singular_values.iter().map(|&s| T::one() / s).collect();
    svd.v.scale_columns(&inv).matmul_t(&svd.u)
}

/// `‖X‖₂ = σ₁(X)`.
pub fn spectral_norm<T: Real>(x: &DenseMatrix<T>) -> Result<T> {
    Ok(singular_values(x)?[0])
}

/// `σ_max / σ_min` over all `min(m, n)` singular values; infinite when singular.
pub fn condition_number<T: Real>(x: &DenseMatrix<T>) -> Result<T> {
    let sv = singular_values(x)?;
    let lo = *sv.last().expect("nonempty");
    if lo == T::zero() {
        return Ok(T::infinity());
    }
    Ok(sv[0] / lo)
}

/// Orthonormal basis of the column space (the `U` factor of the thin SVD).
pub fn orthonormal_basis<T: Real>(x: &DenseMatrix<T>, rank_tol: Option<T>) -> Result<DenseMatrix<T>> {
    Ok(thin_svd(x, rank_tol)?.u)
}

/// Thin `Q` factor of a full-column-rank tall matrix (no rank revealing).
pub fn thin_q<T: Real>(x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    check_input(x)?;
    if x.rows() < x.cols() {
        return Err(CcaError::DimensionMismatch(format!(
            "thin QR needs rows >= cols, got {:?}",
            x.shape()
        )));
    }
    let qr = HouseholderQr::new(x);
    Ok(qr.apply_q(&DenseMatrix::identity(x.cols())))
}

/// `‖QᵀQ − I‖_max`, a convenience for orthonormality checks.
pub fn orthonormality_defect<T: Real>(q: &DenseMatrix<T>) -> T {
    let g = q.gram();
    let mut worst = T::zero();
    for j in 0..g.cols() {
        for i in 0..g.rows() {
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((g.get(i, j) - target).abs());
        }
    }
    worst
}
