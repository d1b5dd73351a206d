//! Brute-force evaluation of the recursive canonical-correlation definition.
//!
//! Slow and only meant for tiny problems, as an independent check of the
//! SVD-based solvers.

use crate::error::{CcaError, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::{axpy, dot, norm2, Real};

const REFINE_ROUNDS: usize = 14;
const REFINE_HALF_WIDTH: usize = 8;

fn gram_schmidt<T: Real>(vectors: &[Vec<T>], tol: T, limit: usize) -> Vec<Vec<T>> {
    let mut basis: Vec<Vec<T>> = Vec::new();
    for v in vectors {
        if basis.len() == limit {
            break;
        }
        let mut w = v.clone();
        let before = norm2(&w);
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let n = norm2(&w);
        if n > tol * before.max(T::min_positive_value()) && n > T::zero() {
            w.iter_mut().for_each(|x| *x /= n);
            basis.push(w);
        }
    }
    basis
}

fn column_basis<T: Real>(x: &DenseMatrix<T>) -> Vec<Vec<T>> {
    let cols: Vec<Vec<T>> = x.columns().map(|c| c.to_vec()).collect();
    let scale = cols.iter().map(|c| norm2(c)).fold(T::zero(), |a, b| a.max(b));
    if scale == T::zero() {
        return Vec::new();
    }
    // scale-aware drop tolerance: columns that add less than this are dependent
    let tol = T::lit(1e-10);
    let normalized: Vec<Vec<T>> = cols
        .iter()
        .map(|c| c.iter().map(|&v| v / scale).collect())
        .collect();
    let mut basis: Vec<Vec<T>> = Vec::new();
    for c in &normalized {
        let mut w = c.clone();
        for _ in 0..2 {
            for q in &basis {
                let d = dot(q, &w);
                axpy(-d, q, &mut w);
            }
        }
        let n = norm2(&w);
        if n > tol {
            w.iter_mut().for_each(|x| *x /= n);
            basis.push(w);
        }
    }
    basis
}

fn combine<T: Real>(basis: &[Vec<T>], coef: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); basis[0].len()];
    for (q, &c) in basis.iter().zip(coef) {
        axpy(c, q, &mut out);
    }
    out
}

fn sphere_point<T: Real>(angles: &[f64]) -> Vec<T> {
    match angles.len() {
        0 => vec![T::one()],
        1 => vec![T::lit(angles[0].cos()), T::lit(angles[0].sin())],
        _ => {
            let (t, p) = (angles[0], angles[1]);
            vec![
                T::lit(t.sin() * p.cos()),
                T::lit(t.sin() * p.sin()),
                T::lit(t.cos()),
            ]
        }
    }
}

/// Largest `max_y σ(x, y)` over unit `x` in span(xs), with the inner max in closed form.
fn objective<T: Real>(xs: &[Vec<T>], ys: &[Vec<T>], angles: &[f64]) -> T {
    let x = combine(xs, &sphere_point::<T>(angles));
    let proj: Vec<T> = ys.iter().map(|y| dot(y, &x)).collect();
    norm2(&proj)
}

fn grid_search<T: Real>(xs: &[Vec<T>], ys: &[Vec<T>], grid: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    let dims = xs.len() - 1;
    if dims == 0 {
        return Vec::new();
    }
    let per_axis = if dims == 1 { grid } else { grid.min(600) };
    let step = pi / per_axis as f64;
    let mut best = vec![0.0; dims];
    let mut best_val = T::neg_infinity();
    let probe = |angles: &[f64], best: &mut Vec<f64>, best_val: &mut T| {
        let v = objective(xs, ys, angles);
        if v > *best_val {
            *best_val = v;
            best.copy_from_slice(angles);
        }
    };
    if dims == 1 {
        for i in 0..per_axis {
            probe(&[i as f64 * step], &mut best, &mut best_val);
        }
    } else {
        for i in 0..=per_axis {
            for j in 0..per_axis {
                probe(&[i as f64 * step, j as f64 * step], &mut best, &mut best_val);
            }
        }
    }
    // zoom in around the best grid point
    let mut h = step;
    let k = REFINE_HALF_WIDTH as i64;
    for _ in 0..REFINE_ROUNDS {
        let fine = h / k as f64;
        let center = best.clone();
        if dims == 1 {
            for i in -k..=k {
                probe(&[center[0] + i as f64 * fine], &mut best, &mut best_val);
            }
        } else {
            for i in -k..=k {
                for j in -k..=k {
                    let p = [center[0] + i as f64 * fine, center[1] + j as f64 * fine];
                    probe(&p, &mut best, &mut best_val);
                }
            }
        }
        h = 2.0 * fine;
    }
    best
}

fn deflate<T: Real>(basis: &[Vec<T>], used: &[T]) -> Vec<Vec<T>> {
    let mut vectors = vec![used.to_vec()];
    vectors.extend(basis.iter().cloned());
    let mut out = gram_schmidt(&vectors, T::lit(1e-6), basis.len());
    out.remove(0);
    out
}

/// Canonical correlations of `(A, B)` found by searching the recursive
/// max-correlation definition over a grid of unit vectors, deflating after
/// each pair. Supports at most three columns per side; `grid >= 360` is the
/// number of angle steps over a half-turn.
pub fn cca_definition_oracle<T: Real>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    grid: usize,
) -> Result<Vec<T>> {
    if a.rows() != b.rows() {
        return Err(CcaError::RowCountMismatch {
            a: a.rows(),
            b: b.rows(),
        });
    }
    if a.cols() > 3 || b.cols() > 3 {
        return Err(CcaError::TooLarge {
            n: a.cols(),
            ell: b.cols(),
        });
    }
    if grid < 360 {
        return Err(CcaError::InvalidAccuracy(format!(
            "oracle grid must have at least 360 steps, got {grid}"
        )));
    }
    let mut xa = column_basis(a);
    let mut xb = column_basis(b);
    let q = xa.len().min(xb.len());
    let mut out = Vec::with_capacity(q);
    for _ in 0..q {
        // search the lower-dimensional side; the definition is symmetric
        let swap = xa.len() > xb.len();
        let (xs, ys) = if swap { (&xb, &xa) } else { (&xa, &xb) };
        let angles = grid_search(xs, ys, grid);
        let x = combine(xs, &sphere_point::<T>(&angles));
        let proj: Vec<T> = ys.iter().map(|y| dot(y, &x)).collect();
        let value = norm2(&proj);
        let y = if value > T::zero() {
            let unit: Vec<T> = proj.iter().map(|&p| p / value).collect();
            combine(ys, &unit)
        } else {
            ys[0].clone()
        };
        out.push(value.min(T::one()));
        let (next_x, next_y) = (deflate(xs, &x), deflate(ys, &y));
        if swap {
            xb = next_x;
            xa = next_y;
        } else {
            xa = next_x;
            xb = next_y;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forty_five_degree_pair() {
        let a = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]).unwrap();
        let s: Vec<f64> = cca_definition_oracle(&a, &b, 360).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-9);
        assert!((s[1] - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn three_dimensional_search() {
        let a = DenseMatrix::from_rows(&[
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0],
        ])
        .unwrap();
        let b = DenseMatrix::from_rows(&[[0.0], [0.0], [1.0], [1.0]]).unwrap();
        let s: Vec<f64> = cca_definition_oracle(&a, &b, 360).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s[0] - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn rejects_wide_inputs_and_coarse_grids() {
        let a = DenseMatrix::<f64>::identity(4);
        let b = DenseMatrix::<f64>::identity(4).leading_columns(2);
        assert!(matches!(cca_definition_oracle(&a, &b, 400), Err(CcaError::TooLarge { .. })));
        let a3 = a.leading_columns(3);
        assert!(cca_definition_oracle(&a3, &b, 100).is_err());
    }
}
