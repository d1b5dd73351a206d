//! Sketch-and-solve CCA: sample sizes, the shared-operator solver and the
//! approximation-quality checkers.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cca::{concat_coherence, exact_cca, CcaResult, Method};
use crate::error::{CcaError, Result};
use crate::matrix::{condition_number, numerical_rank, DenseMatrix, MatrixRef};
use crate::scalar::Real;
use crate::transforms::{OperatorDescriptor, SketchKind, SketchOperator};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeMode {
    /// Sample sizes with the constants from the guarantees.
    Theory,
    /// Same asymptotics, constants dropped.
    #[default]
    Practical,
}

impl fmt::Display for SizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SizeMode::Theory => "theory",
            SizeMode::Practical => "practical",
        })
    }
}

impl FromStr for SizeMode {
    type Err = CcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(SizeMode::Theory),
            "practical" => Ok(SizeMode::Practical),
            other => Err(CcaError::InvalidAccuracy(format!("unknown size mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub transform: SketchKind,
    pub size_mode: SizeMode,
    pub seed: u64,
    pub r_override: Option<usize>,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig {
            epsilon: 0.25,
            delta: 0.05,
            transform: SketchKind::Srht,
            size_mode: SizeMode::Practical,
            seed: 0,
            r_override: None,
        }
    }
}

impl ApproxConfig {
    pub fn new(transform: SketchKind, epsilon: f64, delta: f64) -> Self {
        ApproxConfig {
            epsilon,
            delta,
            transform,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eps_max = match self.transform {
            SketchKind::CountSketch => 1.0 / 3.0,
            SketchKind::Srht | SketchKind::Uniform => 0.5,
        };
        check_accuracy(self.epsilon, eps_max, self.delta)?;
        if self.r_override == Some(0) {
            return Err(CcaError::InvalidSampleSize { r: 0, m: 0 });
        }
        Ok(())
    }
}

fn check_accuracy(epsilon: f64, eps_max: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < eps_max) {
        return Err(CcaError::InvalidAccuracy(format!(
            "epsilon must lie in (0, {eps_max:.4}), got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CcaError::InvalidAccuracy(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok(())
}

fn cap(value: f64, m: usize) -> usize {
    if value >= m as f64 {
        m
    } else {
        (value.ceil() as usize).clamp(1, m)
    }
}

/// Uncapped SRHT sample-size formula.
pub fn srht_sample_bound(
    m: usize,
    n: usize,
    ell: usize,
    epsilon: f64,
    delta: f64,
    mode: SizeMode,
) -> Result<f64> {
    check_accuracy(epsilon, 0.5, delta)?;
    if m == 0 || n == 0 || ell == 0 {
        return Err(CcaError::EmptyMatrix);
    }
    let (m, d) = (m as f64, (n + ell) as f64);
    Ok(match mode {
        SizeMode::Theory => {
            let s = d.sqrt() + (8.0 * (12.0 * m / delta).ln()).sqrt();
            54.0 / (epsilon * epsilon) * s * s * (3.0 * d / delta).ln()
        }
        SizeMode::Practical => {
            let s = d.sqrt() + (m / delta).ln().sqrt();
            s * s * (d / delta).ln() / (epsilon * epsilon)
        }
    })
}

/// SRHT sample size, capped at `m`.
pub fn sample_size_srht(
    m: usize,
    n: usize,
    ell: usize,
    epsilon: f64,
    delta: f64,
    mode: SizeMode,
) -> Result<usize> {
    Ok(cap(srht_sample_bound(m, n, ell, epsilon, delta, mode)?, m))
}

/// CountSketch target size `⌈243(d² + d)/(ε²δ)⌉` with `d = n + ℓ`, capped at `m`.
pub fn sample_size_cw(n: usize, ell: usize, epsilon: f64, delta: f64, m: usize) -> Result<usize> {
    check_accuracy(epsilon, 1.0 / 3.0, delta)?;
    let d = (n + ell) as f64;
    Ok(cap(243.0 * (d * d + d) / (epsilon * epsilon * delta), m))
}

/// Row count for plain uniform sampling, `⌈54 ε⁻² m μ ln(12ω/δ)⌉` capped at `m`,
/// where `μ` is the coherence of `[A ; B]` and `ω` its rank.
pub fn sample_size_uniform(
    m: usize,
    coherence: f64,
    omega: usize,
    epsilon: f64,
    delta: f64,
) -> Result<usize> {
    check_accuracy(epsilon, 0.5, delta)?;
    let bound = 54.0 / (epsilon * epsilon)
        * m as f64
        * coherence
        * (12.0 * omega as f64 / delta).ln();
    Ok(cap(bound, m))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub sketch_seconds: f64,
    pub solve_seconds: f64,
    pub diagnostics_seconds: f64,
}

impl Timings {
    /// Sketching plus the reduced solve; diagnostics are not part of the algorithm.
    pub fn algorithm_seconds(&self) -> f64 {
        self.sketch_seconds + self.solve_seconds
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxDiagnostics<T> {
    pub r_used: usize,
    pub operator: OperatorDescriptor,
    /// Signed `σ_i(A, B) − σ̂_i`, filled in when exact correlations are available.
    pub correlation_errors: Option<Vec<T>>,
    /// `Wᵀ Aᵀ A W`
    pub gram_a: DenseMatrix<T>,
    /// `Pᵀ Bᵀ B P`
    pub gram_b: DenseMatrix<T>,
    pub cond_aw: T,
    pub cond_bp: T,
    /// `μ([A ; B])` when the uniform path had to compute it.
    pub coherence: Option<T>,
    pub entries_touched: usize,
    pub timings: Timings,
}

impl<T: Real> ApproxDiagnostics<T> {
    pub fn attach_exact(&mut self, exact: &CcaResult<T>, approx: &CcaResult<T>) {
        self.correlation_errors = Some(signed_errors(exact, approx));
    }
}

/// `σ_i(A, B) − σ̂_i` over the common prefix.
pub fn signed_errors<T: Real>(exact: &CcaResult<T>, approx: &CcaResult<T>) -> Vec<T> {
    exact
        .correlations
        .iter()
        .zip(&approx.correlations)
        .map(|(&s, &t)| s - t)
        .collect()
}

fn method_for(kind: SketchKind) -> Method {
    match kind {
        SketchKind::Srht => Method::Srht,
        SketchKind::CountSketch => Method::CountSketch,
        SketchKind::Uniform => Method::Uniform,
    }
}

/// Target size the configuration asks for on an `m × n`, `m × ℓ` pair.
fn resolve_r<T: Real>(
    a: MatrixRef<'_, T>,
    b: MatrixRef<'_, T>,
    cfg: &ApproxConfig,
) -> Result<(usize, Option<T>)> {
    let (m, n, ell) = (a.rows(), a.cols(), b.cols());
    if let Some(r) = cfg.r_override {
        let limit = match cfg.transform {
            SketchKind::Srht => m.next_power_of_two(),
            _ => m,
        };
        if r == 0 || r > limit {
            return Err(CcaError::InvalidSampleSize { r, m });
        }
        return Ok((r, None));
    }
    Ok(match cfg.transform {
        SketchKind::Srht => (
            sample_size_srht(m, n, ell, cfg.epsilon, cfg.delta, cfg.size_mode)?,
            None,
        ),
        SketchKind::CountSketch => (sample_size_cw(n, ell, cfg.epsilon, cfg.delta, m)?, None),
        SketchKind::Uniform => {
            let cc = concat_coherence(&a.to_dense(), &b.to_dense(), None)?;
            let r = sample_size_uniform(
                m,
                cc.coherence.to_f64_lossy(),
                cc.rank,
                cfg.epsilon,
                cfg.delta,
            )?;
            (r, Some(cc.coherence))
        }
    })
}

/// `κ(X)` from `G = XᵀX`, which is `sqrt(κ(G))`; avoids a second pass over the tall `X`.
/// `Wᵀ G W`, symmetrized.
fn congruence<T: Real>(g: &DenseMatrix<T>, w: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let s = w.t_matmul(&g.matmul(w)?)?;
    let half = T::lit(0.5);
    let q = s.rows();
    let mut out = s.clone();
    for j in 0..q {
        for i in 0..q {
            out.set(i, j, half * (s.get(i, j) + s.get(j, i)));
        }
    }
    Ok(out)
}

fn condition_from_gram<T: Real>(g: &DenseMatrix<T>) -> Result<T> {
    Ok(condition_number(g)?.sqrt())
}

fn rank_of<T: Real>(x: MatrixRef<'_, T>) -> Result<usize> {
    numerical_rank(&x.to_dense(), None)
}

/// Approximate CCA of `(A, B)`: one operator realized from `cfg` sketches
/// both inputs, and the exact solver runs on the sketched pair.
pub fn approx_cca<'a, T: Real>(
    a: impl Into<MatrixRef<'a, T>>,
    b: impl Into<MatrixRef<'a, T>>,
    cfg: &ApproxConfig,
) -> Result<(CcaResult<T>, ApproxDiagnostics<T>)> {
    let (a, b) = (a.into(), b.into());
    cfg.validate()?;
    if a.rows() != b.rows() {
        return Err(CcaError::RowCountMismatch {
            a: a.rows(),
            b: b.rows(),
        });
    }
    let m = a.rows();
    if m == 0 || a.cols() == 0 || b.cols() == 0 {
        return Err(CcaError::EmptyMatrix);
    }
    if m < a.cols().max(b.cols()) {
        return Err(CcaError::DimensionMismatch(format!(
            "need m >= max(n, l), got m = {m}, n = {}, l = {}",
            a.cols(),
            b.cols()
        )));
    }
    let (r, coherence) = resolve_r(a, b, cfg)?;

    let start = Instant::now();
    let op = SketchOperator::new(cfg.transform, m, r, cfg.seed)?;
    let (sa, stats_a) = op.apply_instrumented(a)?;
    let (sb, stats_b) = op.apply_instrumented(b)?;
    let sketch_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let mut result = match exact_cca(&sa, &sb, None) {
        Ok(res) => res,
        Err(CcaError::RankZero { which }) => {
            let original = if which == "A" { a } else { b };
            let before = rank_of(original)?;
            return Err(if before == 0 {
                CcaError::RankZero { which }
            } else {
                CcaError::RankCollapse {
                    which,
                    before,
                    after: 0,
                }
            });
        }
        Err(e) => return Err(e),
    };
    let solve_seconds = start.elapsed().as_secs_f64();
    // rank(SX) <= rank(X) <= cols, so only a deficient sketch needs the original rank
    for (which, x, after) in [("A", a, result.rank_a), ("B", b, result.rank_b)] {
        if after < x.cols() {
            let before = rank_of(x)?;
            if after < before {
                return Err(CcaError::RankCollapse {
                    which,
                    before,
                    after,
                });
            }
        }
    }
    result.method = method_for(cfg.transform);

    let start = Instant::now();
    // Wᵀ(AᵀA)W touches the m rows once per side instead of twice.
    let gram_a = congruence(&a.gram(), &result.weights_a)?;
    let gram_b = congruence(&b.gram(), &result.weights_b)?;
    let diagnostics = ApproxDiagnostics {
        r_used: r,
        operator: op.descriptor(),
        correlation_errors: None,
        cond_aw: condition_from_gram(&gram_a)?,
        cond_bp: condition_from_gram(&gram_b)?,
        gram_a,
        gram_b,
        coherence,
        entries_touched: stats_a.entries_touched + stats_b.entries_touched,
        timings: Timings {
            sketch_seconds,
            solve_seconds,
            diagnostics_seconds: start.elapsed().as_secs_f64(),
        },
    };
    Ok((result, diagnostics))
}

/// Outcome of one clause: `worst_slack` is the smallest `bound − observed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClauseReport {
    pub passed: bool,
    pub worst_slack: f64,
}

impl ClauseReport {
    fn from_slacks(slacks: impl IntoIterator<Item = f64>) -> Self {
        let worst = slacks.into_iter().fold(f64::INFINITY, f64::min);
        ClauseReport {
            passed: worst >= 0.0,
            worst_slack: worst,
        }
    }
}

/// What the three clauses observe for a candidate `(W, P)`.
struct Geometry {
    exact: Vec<f64>,
    approx: Vec<f64>,
    gram_a: Vec<Vec<f64>>,
    gram_b: Vec<Vec<f64>>,
    /// `σ(A w_i, B p_i)`
    paired: Vec<f64>,
}

fn geometry<T: Real>(
    exact: &CcaResult<T>,
    approx: &CcaResult<T>,
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
) -> Result<Geometry> {
    let q = exact.correlations.len();
    if approx.correlations.len() != q
        || approx.weights_a.shape() != (a.cols(), q)
        || approx.weights_b.shape() != (b.cols(), q)
        || a.rows() != b.rows()
    {
        return Err(CcaError::DimensionMismatch(format!(
            "exact has {q} pairs, approx has {} with weights {:?} / {:?}; A is {:?}, B is {:?}",
            approx.correlations.len(),
            approx.weights_a.shape(),
            approx.weights_b.shape(),
            a.shape(),
            b.shape()
        )));
    }
    let aw = a.matmul(&approx.weights_a)?;
    let bp = b.matmul(&approx.weights_b)?;
    let to_rows = |g: DenseMatrix<T>| -> Vec<Vec<f64>> {
        g.to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(|v| v.to_f64_lossy()).collect())
            .collect()
    };
    let gram_a = to_rows(aw.gram());
    let gram_b = to_rows(bp.gram());
    let cross = aw.t_matmul(&bp)?;
    let paired = (0..q)
        .map(|i| {
            let denom = (gram_a[i][i] * gram_b[i][i]).sqrt();
            if denom > 0.0 {
                cross.get(i, i).to_f64_lossy().abs() / denom
            } else {
                0.0
            }
        })
        .collect();
    Ok(Geometry {
        exact: exact.correlations.iter().map(|v| v.to_f64_lossy()).collect(),
        approx: approx.correlations.iter().map(|v| v.to_f64_lossy()).collect(),
        gram_a,
        gram_b,
        paired,
    })
}

fn gram_slacks(g: &[Vec<f64>], diag_ok: impl Fn(f64) -> f64, off_bound: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for (i, row) in g.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out.push(if i == j { diag_ok(v) } else { off_bound - v.abs() });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaReport {
    pub eta: f64,
    pub clause_a: ClauseReport,
    pub clause_b: ClauseReport,
    pub clause_c: ClauseReport,
    pub passed: bool,
}

/// Checks whether `approx` is an η-approximate CCA of `(A, B)`.
pub fn check_eta_approx<T: Real>(
    exact: &CcaResult<T>,
    approx: &CcaResult<T>,
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    eta: f64,
) -> Result<EtaReport> {
    let g = geometry(exact, approx, a, b)?;
    let clause_a = ClauseReport::from_slacks(
        g.exact.iter().zip(&g.approx).map(|(s, t)| eta - (s - t).abs()),
    );
    let near_one = |v: f64| eta - (v - 1.0).abs();
    let mut b_slacks = gram_slacks(&g.gram_a, near_one, eta);
    b_slacks.extend(gram_slacks(&g.gram_b, near_one, eta));
    let clause_b = ClauseReport::from_slacks(b_slacks);
    let clause_c = ClauseReport::from_slacks(
        g.exact.iter().zip(&g.paired).map(|(s, p)| eta - (s - p).abs()),
    );
    Ok(EtaReport {
        eta,
        passed: clause_a.passed && clause_b.passed && clause_c.passed,
        clause_a,
        clause_b,
        clause_c,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub epsilon: f64,
    pub clause_a: ClauseReport,
    pub clause_b: ClauseReport,
    pub clause_c: ClauseReport,
    /// Set when the printed lower bound of clause (c) exceeds its upper bound
    /// for some index; the clause is still evaluated as printed.
    pub bracket_inverted: bool,
    pub passed: bool,
}

/// Evaluates the explicit-constant guarantees for a sketch built at accuracy `ε`:
/// (a) `|σ_i − σ̂_i| ≤ ε + 2ε²/9`;
/// (b) `‖A w_i‖² ∈ [1/(1+ε/3), 1/(1−ε/3)]`, `|⟨A w_i, A w_j⟩| ≤ ε/(3−ε)`, same for `B P`;
/// (c) `σ_i/(1+ε/3) − (ε/3)/(1−ε/9) ≤ σ(A w_i, B p_i) ≤ σ_i/(1−ε/3) + (ε/3)/(1−ε/3)²`.
pub fn check_sketch_bounds<T: Real>(
    exact: &CcaResult<T>,
    approx: &CcaResult<T>,
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    epsilon: f64,
) -> Result<BoundsReport> {
    let e = epsilon;
    let g = geometry(exact, approx, a, b)?;
    let tol_a = e + 2.0 * e * e / 9.0;
    let clause_a = ClauseReport::from_slacks(
        g.exact.iter().zip(&g.approx).map(|(s, t)| tol_a - (s - t).abs()),
    );
    let (lo, hi) = (1.0 / (1.0 + e / 3.0), 1.0 / (1.0 - e / 3.0));
    let window = |v: f64| (v - lo).min(hi - v);
    let off = e / (3.0 - e);
    let mut b_slacks = gram_slacks(&g.gram_a, window, off);
    b_slacks.extend(gram_slacks(&g.gram_b, window, off));
    let clause_b = ClauseReport::from_slacks(b_slacks);
    let mut inverted = false;
    let c_slacks: Vec<f64> = g
        .exact
        .iter()
        .zip(&g.paired)
        .map(|(&s, &p)| {
            let lower = s / (1.0 + e / 3.0) - (e / 3.0) / (1.0 - e / 9.0);
            let upper = s / (1.0 - e / 3.0) + (e / 3.0) / ((1.0 - e / 3.0) * (1.0 - e / 3.0));
            inverted |= lower > upper;
            (p - lower).min(upper - p)
        })
        .collect();
    let clause_c = ClauseReport::from_slacks(c_slacks);
    Ok(BoundsReport {
        epsilon,
        passed: clause_a.passed && clause_b.passed && clause_c.passed,
        clause_a,
        clause_b,
        clause_c,
        bracket_inverted: inverted,
    })
}
