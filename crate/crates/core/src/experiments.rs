//! Synthetic generators, dataset presets and the repeated-run report.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{approx_cca, signed_errors, ApproxConfig};
use crate::cca::exact_cca;
use crate::error::{CcaError, Result};
use crate::matrix::io::{load_matrix, write_csv, LoadOptions, Loaded, MatrixFormat};
use crate::matrix::{DenseMatrix, MatrixRef};
use crate::rng::{derive_seed, gaussian_matrix, rademacher_matrix, stream_rng, uniform_matrix};
use crate::transforms::{OperatorDescriptor, SketchKind};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_NOISE: f64 = 0.1;

pub const MEDIAMILL_ROWS: usize = 43907;
pub const MEDIAMILL_FEATURES: usize = 120;
pub const MEDIAMILL_LABELS: usize = 101;

// generator streams, disjoint from the operator streams
const S_G: u64 = 10;
const S_X: u64 = 11;
const S_W: u64 = 12;
const S_Y: u64 = 13;
const S_Z: u64 = 14;

/// `A = G X + c W`, `B = G Y + c Z` with Gaussian `G, W, Z` (m × n) and
/// uniform `X, Y` (n × n).
pub fn gen_experiment1_with(
    m: usize,
    n: usize,
    noise: f64,
    seed: u64,
) -> Result<(DenseMatrix<f64>, DenseMatrix<f64>)> {
    if n == 0 || m < n {
        return Err(CcaError::DimensionMismatch(format!(
            "need m >= n >= 1, got m = {m}, n = {n}"
        )));
    }
    let g = gaussian_matrix::<f64>(m, n, &mut stream_rng(seed, S_G));
    let x = uniform_matrix::<f64>(n, n, &mut stream_rng(seed, S_X));
    let y = uniform_matrix::<f64>(n, n, &mut stream_rng(seed, S_Y));
    let w = gaussian_matrix::<f64>(m, n, &mut stream_rng(seed, S_W));
    let z = gaussian_matrix::<f64>(m, n, &mut stream_rng(seed, S_Z));
    let a = g.matmul(&x)?.add(&w.scale(noise))?;
    let b = g.matmul(&y)?.add(&z.scale(noise))?;
    Ok((a, b))
}

pub fn gen_experiment1(m: usize, n: usize, seed: u64) -> Result<(DenseMatrix<f64>, DenseMatrix<f64>)> {
    gen_experiment1_with(m, n, DEFAULT_NOISE, seed)
}

/// `A = X + c · Y · (1 + Z)`, `B = Y` with Gaussian `X` (m × n), Rademacher
/// `Y` (m × k) and uniform `Z` (k × n).
pub fn gen_experiment2_with(
    m: usize,
    n: usize,
    k: usize,
    noise: f64,
    seed: u64,
) -> Result<(DenseMatrix<f64>, DenseMatrix<f64>)> {
    if n == 0 || k == 0 || m < n.max(k) {
        return Err(CcaError::DimensionMismatch(format!(
            "need m >= max(n, k) and n, k >= 1, got m = {m}, n = {n}, k = {k}"
        )));
    }
    let x = gaussian_matrix::<f64>(m, n, &mut stream_rng(seed, S_X));
    let y = rademacher_matrix::<f64>(m, k, &mut stream_rng(seed, S_Y));
    let z = uniform_matrix::<f64>(k, n, &mut stream_rng(seed, S_Z));
    let ones_plus_z = DenseMatrix::from_fn(k, n, |i, j| 1.0 + z.get(i, j))?;
    let a = x.add(&y.matmul(&ones_plus_z)?.scale(noise))?;
    Ok((a, y))
}

pub fn gen_experiment2(
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<(DenseMatrix<f64>, DenseMatrix<f64>)> {
    gen_experiment2_with(m, n, k, DEFAULT_NOISE, seed)
}

/// Where the pair comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Experiment1 {
        m: usize,
        n: usize,
        noise: f64,
    },
    Experiment2 {
        m: usize,
        n: usize,
        k: usize,
        noise: f64,
    },
    /// libsvm multilabel file: features against labels.
    Multilabel { path: PathBuf },
    Files {
        a: PathBuf,
        b: PathBuf,
        format: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Exp1,
    Exp2,
    Mediamill,
}

impl Preset {
    pub fn id(self) -> &'static str {
        match self {
            Preset::Exp1 => "exp1",
            Preset::Exp2 => "exp2",
            Preset::Mediamill => "mediamill",
        }
    }

    /// Accuracy parameters used for the preset.
    pub fn config(self) -> ApproxConfig {
        match self {
            Preset::Exp1 | Preset::Exp2 => ApproxConfig::new(SketchKind::Srht, 0.25, 0.05),
            Preset::Mediamill => ApproxConfig::new(SketchKind::Srht, 0.5, 0.2),
        }
    }

    /// Full-size synthetic source; the Mediamill preset needs a path.
    pub fn source(self, dataset: Option<&Path>) -> Result<Source> {
        Ok(match self {
            Preset::Exp1 => Source::Experiment1 {
                m: 120_000,
                n: 60,
                noise: DEFAULT_NOISE,
            },
            Preset::Exp2 => Source::Experiment2 {
                m: 80_000,
                n: 80,
                k: 60,
                noise: DEFAULT_NOISE,
            },
            Preset::Mediamill => Source::Multilabel {
                path: dataset
                    .ok_or_else(|| CcaError::DatasetNotFound(PathBuf::from("<unset>")))?
                    .to_path_buf(),
            },
        })
    }
}

impl std::str::FromStr for Preset {
    type Err = CcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp1" | "1" => Ok(Preset::Exp1),
            "exp2" | "2" => Ok(Preset::Exp2),
            "mediamill" => Ok(Preset::Mediamill),
            other => Err(CcaError::InvalidAccuracy(format!("unknown preset `{other}`"))),
        }
    }
}

/// Inputs as loaded: dense, or sparse for the multilabel data.
pub enum Pair {
    Dense(DenseMatrix<f64>, DenseMatrix<f64>),
    Sparse(crate::SparseMatrix<f64>, crate::SparseMatrix<f64>),
}

impl Pair {
    fn refs(&self) -> (MatrixRef<'_, f64>, MatrixRef<'_, f64>) {
        match self {
            Pair::Dense(a, b) => (a.into(), b.into()),
            Pair::Sparse(a, b) => (a.into(), b.into()),
        }
    }
}

/// Loads or generates the pair; the second value collects shape warnings.
pub fn materialize(source: &Source, seed: u64) -> Result<(Pair, Vec<String>)> {
    let mut warnings = Vec::new();
    let pair = match source {
        Source::Experiment1 { m, n, noise } => {
            let (a, b) = gen_experiment1_with(*m, *n, *noise, seed)?;
            Pair::Dense(a, b)
        }
        Source::Experiment2 { m, n, k, noise } => {
            let (a, b) = gen_experiment2_with(*m, *n, *k, *noise, seed)?;
            Pair::Dense(a, b)
        }
        Source::Multilabel { path } => {
            let loaded = load_matrix::<f64>(path, MatrixFormat::LibsvmMultilabel, &LoadOptions::default())?;
            let Loaded::Multilabel { features, labels } = loaded else {
                unreachable!("libsvm loader returns a multilabel pair")
            };
            let expected = (MEDIAMILL_ROWS, MEDIAMILL_FEATURES, MEDIAMILL_LABELS);
            let got = (features.rows(), features.cols(), labels.cols());
            if got != expected {
                let msg = format!(
                    "expected {} rows, {} features and {} labels; got {} rows, {} features and {} labels",
                    expected.0, expected.1, expected.2, got.0, got.1, got.2
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
            Pair::Sparse(features, labels)
        }
        Source::Files { a, b, format } => {
            let load = |p: &Path| -> Result<DenseMatrix<f64>> {
                let fmt = match format {
                    Some(f) => f.parse().map_err(CcaError::InvalidAccuracy)?,
                    None => MatrixFormat::from_extension(p).ok_or_else(|| {
                        CcaError::InvalidAccuracy(format!("cannot infer the format of {}", p.display()))
                    })?,
                };
                Ok(load_matrix(p, fmt, &LoadOptions::default())?.into_dense())
            };
            Pair::Dense(load(a)?, load(b)?)
        }
    };
    Ok((pair, warnings))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactSummary {
    pub correlations: Vec<f64>,
    pub rank_a: usize,
    pub rank_b: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub rep: usize,
    pub seed: u64,
    pub r_used: usize,
    pub operator: OperatorDescriptor,
    pub correlations: Vec<f64>,
    /// `σ_i(A, B) − σ̂_i`
    pub signed_errors: Vec<f64>,
    pub max_abs_error: f64,
    pub cond_aw: f64,
    pub cond_bp: f64,
    /// `|Wᵀ Aᵀ A W|` as CSV.
    pub gram_a_csv: String,
    /// `|Pᵀ Bᵀ B P|` as CSV.
    pub gram_b_csv: String,
    pub sketch_seconds: f64,
    pub solve_seconds: f64,
    pub approx_seconds: f64,
    pub diagnostics_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max_abs_error: f64,
    pub max_condition_number: f64,
    pub exact_seconds: f64,
    pub mean_approx_seconds: f64,
    pub approx_over_exact_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub experiment: String,
    pub source: Source,
    pub seed: u64,
    pub config: ApproxConfig,
    pub m: usize,
    pub n: usize,
    pub ell: usize,
    pub repetitions: usize,
    /// False when repetitions ran concurrently and timings are not comparable.
    pub timing_comparable: bool,
    pub exact: ExactSummary,
    pub runs: Vec<RunReport>,
    pub summary: Summary,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub parallel: bool,
    /// Directory for per-run Gram CSV and PGM files.
    pub gram_dir: Option<PathBuf>,
}

fn abs_csv(g: &DenseMatrix<f64>) -> String {
    let abs = DenseMatrix::from_fn(g.rows(), g.cols(), |i, j| g.get(i, j).abs()).expect("finite");
    let mut buf = Vec::new();
    write_csv(&mut buf, &abs).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Gray level for `|x|` on a log scale: 0 (black) at 1, 255 (white) at 1e-5.
pub fn gray_level(x: f64) -> u8 {
    let v = x.abs().clamp(1e-5, 1.0);
    let t = (v.log10() + 5.0) / 5.0;
    (255.0 * (1.0 - t)).round() as u8
}

/// Binary PGM (P5) image of `|g|`.
pub fn gram_pgm(g: &DenseMatrix<f64>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", g.cols(), g.rows()).into_bytes();
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            out.push(gray_level(g.get(i, j)));
        }
    }
    out
}

fn one_run(
    pair: &Pair,
    cfg: &ApproxConfig,
    rep: usize,
    exact: &crate::CcaResult<f64>,
    gram_dir: Option<&Path>,
) -> Result<RunReport> {
    let seed = derive_seed(cfg.seed, rep as u64);
    let cfg = ApproxConfig { seed, ..cfg.clone() };
    let (a, b) = pair.refs();
    let (res, diag) = approx_cca(a, b, &cfg)?;
    let errors = signed_errors(exact, &res);
    if let Some(dir) = gram_dir {
        fs::create_dir_all(dir)?;
        for (tag, g) in [("a", &diag.gram_a), ("b", &diag.gram_b)] {
            fs::write(dir.join(format!("rep{rep}_gram_{tag}.csv")), abs_csv(g))?;
            fs::write(dir.join(format!("rep{rep}_gram_{tag}.pgm")), gram_pgm(g))?;
        }
    }
    Ok(RunReport {
        rep,
        seed,
        r_used: diag.r_used,
        operator: diag.operator,
        max_abs_error: errors.iter().fold(0.0, |m: f64, e| m.max(e.abs())),
        signed_errors: errors,
        correlations: res.correlations,
        cond_aw: diag.cond_aw,
        cond_bp: diag.cond_bp,
        gram_a_csv: abs_csv(&diag.gram_a),
        gram_b_csv: abs_csv(&diag.gram_b),
        sketch_seconds: diag.timings.sketch_seconds,
        solve_seconds: diag.timings.solve_seconds,
        approx_seconds: diag.timings.algorithm_seconds(),
        diagnostics_seconds: diag.timings.diagnostics_seconds,
    })
}

/// Builds the pair once, solves it exactly once and approximately
/// `repetitions` times with seeds derived from `cfg.seed`.
pub fn run_experiment(
    experiment: &str,
    cfg: &ApproxConfig,
    source: &Source,
    repetitions: usize,
    opts: &RunOptions,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (pair, warnings) = materialize(source, cfg.seed)?;
    let (a, b) = pair.refs();
    let (m, n, ell) = (a.rows(), a.cols(), b.cols());

    let (ad, bd) = (a.to_dense(), b.to_dense());
    let start = Instant::now();
    let exact = exact_cca(&ad, &bd, None)?;
    let exact_seconds = start.elapsed().as_secs_f64();
    drop((ad, bd));

    let gram_dir = opts.gram_dir.as_deref();
    let runs: Vec<RunReport> = if opts.parallel {
        (0..repetitions)
            .into_par_iter()
            .map(|rep| one_run(&pair, cfg, rep, &exact, gram_dir))
            .collect::<Result<_>>()?
    } else {
        (0..repetitions)
            .map(|rep| one_run(&pair, cfg, rep, &exact, gram_dir))
            .collect::<Result<_>>()?
    };

    let max_abs_error = runs.iter().fold(0.0, |m: f64, r| m.max(r.max_abs_error));
    let max_condition_number = runs
        .iter()
        .fold(0.0, |m: f64, r| m.max(r.cond_aw).max(r.cond_bp));
    let mean_approx_seconds = if runs.is_empty() {
        0.0
    } else {
        runs.iter().map(|r| r.approx_seconds).sum::<f64>() / runs.len() as f64
    };
    let report = ExperimentReport {
        schema: SCHEMA_VERSION,
        experiment: experiment.to_string(),
        source: source.clone(),
        seed: cfg.seed,
        config: cfg.clone(),
        m,
        n,
        ell,
        repetitions,
        timing_comparable: !opts.parallel,
        exact: ExactSummary {
            correlations: exact.correlations.clone(),
            rank_a: exact.rank_a,
            rank_b: exact.rank_b,
            seconds: exact_seconds,
        },
        runs,
        summary: Summary {
            max_abs_error,
            max_condition_number,
            exact_seconds,
            mean_approx_seconds,
            approx_over_exact_seconds: if exact_seconds > 0.0 {
                mean_approx_seconds / exact_seconds
            } else {
                0.0
            },
        },
        warnings,
    };
    Ok(report)
}
