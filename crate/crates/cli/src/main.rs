//! `cca`: exact and sketched CCA, synthetic experiments and lemma checks.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fastcca::approx::{approx_cca, ApproxConfig, SizeMode};
use fastcca::cca::{coherence, concat_coherence};
use fastcca::experiments::{run_experiment, Preset, RunOptions, Source, DEFAULT_NOISE, SCHEMA_VERSION};
use fastcca::matrix::io::{load_matrix, LoadOptions, Loaded, MatrixFormat};
use fastcca::verify::{run_suite, LemmaSelection};
use fastcca::{exact_cca, CcaError, DenseMatrix, MatrixRef, SketchKind, SparseMatrix};

#[derive(Parser)]
#[command(name = "cca", version, about = "Exact and randomized canonical correlation analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact CCA of two matrices.
    Exact(ExactArgs),
    /// Sketch-and-solve CCA of two matrices.
    Approx(ApproxArgs),
    /// Synthetic experiment with repeated sketched runs.
    Synth(SynthArgs),
    /// Monte-Carlo checks of the perturbation and embedding lemmas.
    Verify(VerifyArgs),
    /// Coherence of A, and of [A ; B] when B is given.
    Coherence(CoherenceArgs),
    /// The Mediamill experiment on a user-supplied libsvm multilabel file.
    Mediamill(MediamillArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Left matrix. For libsvm multilabel files this side reads the features.
    #[arg(long)]
    a: PathBuf,
    /// Right matrix. For libsvm multilabel files this side reads the labels.
    #[arg(long)]
    b: PathBuf,
    /// mm, csv or libsvm; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<String>,
    /// Skip one header line in CSV inputs.
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    rank_tol: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ApproxArgs {
    #[command(flatten)]
    input: InputArgs,
    /// srht, cw or uniform
    #[arg(long, default_value = "srht")]
    transform: SketchKind,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long, default_value = "practical")]
    size_mode: SizeMode,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also run the exact solver and report signed errors.
    #[arg(long)]
    compare: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// 1 or 2
    #[arg(long)]
    experiment: u8,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "srht")]
    transform: SketchKind,
    #[arg(long, default_value = "practical")]
    size_mode: SizeMode,
    #[arg(long)]
    r: Option<usize>,
    /// Noise coefficient of the generator.
    #[arg(long, default_value_t = DEFAULT_NOISE)]
    noise: f64,
    /// Run repetitions concurrently; timings are then marked as not comparable.
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    out: PathBuf,
    /// Write |Gram| matrices of every run as CSV and PGM here.
    #[arg(long)]
    gram_dir: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// pert4, pert5, pert6, sampling, rht, cw or all
    #[arg(long, default_value = "all")]
    lemma: LemmaSelection,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CoherenceArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    header: bool,
    #[arg(long)]
    rank_tol: Option<f64>,
}

#[derive(Args)]
struct MediamillArgs {
    /// libsvm multilabel file
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    gram_dir: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Numerical(String),
    Verification(String),
}

impl From<CcaError> for Failure {
    fn from(e: CcaError) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

#[derive(Clone, Copy)]
enum Side {
    A,
    B,
}

enum Input {
    Dense(DenseMatrix<f64>),
    Sparse(SparseMatrix<f64>),
}

impl Input {
    fn as_ref(&self) -> MatrixRef<'_, f64> {
        match self {
            Input::Dense(d) => d.into(),
            Input::Sparse(s) => s.into(),
        }
    }

    fn dense(&self) -> std::borrow::Cow<'_, DenseMatrix<f64>> {
        self.as_ref().to_dense()
    }
}

fn resolve_format(path: &Path, format: Option<&str>) -> CliResult<MatrixFormat> {
    match format {
        Some(f) => f.parse().map_err(Failure::Input),
        None => MatrixFormat::from_extension(path).ok_or_else(|| {
            Failure::Input(format!(
                "cannot infer the format of {}; pass --format mm|csv|libsvm",
                path.display()
            ))
        }),
    }
}

fn load(path: &Path, format: Option<&str>, header: bool, side: Side) -> CliResult<Input> {
    let fmt = resolve_format(path, format)?;
    let opts = LoadOptions {
        csv_header: header,
        ..Default::default()
    };
    Ok(match load_matrix::<f64>(path, fmt, &opts)? {
        Loaded::Dense(d) => Input::Dense(d),
        Loaded::Sparse(s) => Input::Sparse(s),
        Loaded::Multilabel { features, labels } => Input::Sparse(match side {
            Side::A => features,
            Side::B => labels,
        }),
    })
}

fn load_pair(input: &InputArgs) -> CliResult<(Input, Input)> {
    let f = input.format.as_deref();
    Ok((
        load(&input.a, f, input.header, Side::A)?,
        load(&input.b, f, input.header, Side::B)?,
    ))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Serialize)]
struct SolveReport<'a> {
    schema: u32,
    command: &'static str,
    m: usize,
    n: usize,
    ell: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a ApproxConfig>,
    result: &'a fastcca::CcaResult<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<&'a fastcca::ApproxDiagnostics<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_correlations: Option<Vec<f64>>,
    solve_seconds: f64,
}

fn cmd_exact(args: ExactArgs) -> CliResult {
    let (a, b) = load_pair(&args.input)?;
    let (a, b) = (a.dense(), b.dense());
    let start = Instant::now();
    let res = exact_cca(&a, &b, args.rank_tol)?;
    let seconds = start.elapsed().as_secs_f64();
    println!("exact: q = {}, top correlation {:.6}", res.len(), res.correlations[0]);
    write_json(
        &args.out,
        &SolveReport {
            schema: SCHEMA_VERSION,
            command: "exact",
            m: a.rows(),
            n: a.cols(),
            ell: b.cols(),
            config: None,
            result: &res,
            diagnostics: None,
            exact_correlations: None,
            solve_seconds: seconds,
        },
    )
}

fn cmd_approx(args: ApproxArgs) -> CliResult {
    let (a, b) = load_pair(&args.input)?;
    let cfg = ApproxConfig {
        epsilon: args.eps,
        delta: args.delta,
        transform: args.transform,
        size_mode: args.size_mode,
        seed: args.seed,
        r_override: args.r,
    };
    let (res, mut diag) = approx_cca(a.as_ref(), b.as_ref(), &cfg)?;
    let exact = if args.compare {
        let exact = exact_cca(&a.dense(), &b.dense(), None)?;
        diag.attach_exact(&exact, &res);
        Some(exact.correlations)
    } else {
        None
    };
    println!(
        "{}: r = {}, q = {}, cond(AW) = {:.4}, cond(BP) = {:.4}",
        cfg.transform,
        diag.r_used,
        res.len(),
        diag.cond_aw,
        diag.cond_bp
    );
    if let Some(errs) = &diag.correlation_errors {
        let worst = errs.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        println!("max |exact - approx| = {worst:.3e}");
    }
    write_json(
        &args.out,
        &SolveReport {
            schema: SCHEMA_VERSION,
            command: "approx",
            m: a.as_ref().rows(),
            n: a.as_ref().cols(),
            ell: b.as_ref().cols(),
            config: Some(&cfg),
            result: &res,
            solve_seconds: diag.timings.algorithm_seconds(),
            diagnostics: Some(&diag),
            exact_correlations: exact,
        },
    )
}

fn print_summary(report: &fastcca::experiments::ExperimentReport) {
    println!(
        "{}: m = {}, n = {}, l = {}, {} runs",
        report.experiment, report.m, report.n, report.ell, report.repetitions
    );
    println!("{:>4} {:>8} {:>12} {:>9} {:>9} {:>10}", "rep", "r", "max|err|", "cond AW", "cond BP", "seconds");
    for run in &report.runs {
        println!(
            "{:>4} {:>8} {:>12.4e} {:>9.4} {:>9.4} {:>10.4}",
            run.rep, run.r_used, run.max_abs_error, run.cond_aw, run.cond_bp, run.approx_seconds
        );
    }
    println!(
        "exact {:.4} s, sketched {:.4} s on average, max |err| {:.4e}",
        report.summary.exact_seconds, report.summary.mean_approx_seconds, report.summary.max_abs_error
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn cmd_synth(args: SynthArgs) -> CliResult {
    let source = match args.experiment {
        1 => Source::Experiment1 {
            m: args.m.unwrap_or(120_000),
            n: args.n.unwrap_or(60),
            noise: args.noise,
        },
        2 => Source::Experiment2 {
            m: args.m.unwrap_or(80_000),
            n: args.n.unwrap_or(80),
            k: args.k.unwrap_or(60),
            noise: args.noise,
        },
        other => return Err(Failure::Input(format!("--experiment must be 1 or 2, got {other}"))),
    };
    let cfg = ApproxConfig {
        epsilon: args.eps,
        delta: args.delta,
        transform: args.transform,
        size_mode: args.size_mode,
        seed: args.seed,
        r_override: args.r,
    };
    let opts = RunOptions {
        parallel: args.parallel,
        gram_dir: args.gram_dir,
    };
    let id = if args.experiment == 1 { Preset::Exp1 } else { Preset::Exp2 }.id();
    let report = run_experiment(id, &cfg, &source, args.reps, &opts)?;
    print_summary(&report);
    write_json(&args.out, &report)
}

fn cmd_mediamill(args: MediamillArgs) -> CliResult {
    let mut cfg = Preset::Mediamill.config();
    cfg.seed = args.seed;
    if let Some(e) = args.eps {
        cfg.epsilon = e;
    }
    if let Some(d) = args.delta {
        cfg.delta = d;
    }
    let source = Preset::Mediamill.source(Some(&args.data))?;
    let opts = RunOptions {
        parallel: false,
        gram_dir: args.gram_dir,
    };
    let report = run_experiment(Preset::Mediamill.id(), &cfg, &source, args.reps, &opts)?;
    print_summary(&report);
    write_json(&args.out, &report)
}

fn cmd_verify(args: VerifyArgs) -> CliResult {
    let reports = run_suite(args.lemma, args.trials, args.seed)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut file = fs::File::create(&args.out)?;
    let mut unexpected = Vec::new();
    for r in &reports {
        writeln!(file, "{}", r.to_json_line())?;
        let verdict = match (r.passed, r.expect_failure) {
            (true, false) => "pass",
            (false, true) => "fails as expected",
            (false, false) => "FAIL",
            (true, true) => "UNEXPECTED PASS",
        };
        println!(
            "{:<15} {:<55} included {:>4}/{:<4} violations {:>4} budget {:.3}  {verdict}",
            r.lemma.to_string(),
            r.params.instance,
            r.included,
            r.trials,
            r.violations,
            r.budget
        );
        if !r.as_expected() {
            unexpected.push(r.lemma.to_string());
        }
    }
    if unexpected.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("checks over budget: {}", unexpected.join(", "))))
    }
}

fn cmd_coherence(args: CoherenceArgs) -> CliResult {
    let f = args.format.as_deref();
    let a = load(&args.a, f, args.header, Side::A)?;
    let a = a.dense();
    println!("mu(A) = {:.6e}", coherence(&a, args.rank_tol)?);
    if let Some(bp) = &args.b {
        let b = load(bp, f, args.header, Side::B)?;
        let cc = concat_coherence(&a, &b.dense(), args.rank_tol)?;
        println!("mu([A ; B]) = {:.6e}", cc.coherence);
        println!("omega = {}", cc.rank);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Exact(a) => cmd_exact(a),
        Command::Approx(a) => cmd_approx(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Coherence(a) => cmd_coherence(a),
        Command::Mediamill(a) => cmd_mediamill(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failure: {msg}");
            ExitCode::from(4)
        }
    }
}
