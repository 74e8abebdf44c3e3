//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error, 3 numeric
//! failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::Error;
use crate::estimator::{fit, fit_instrumented, predict, FitConfig, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::eval::{
    auc, binary_labels, coefficient_error, kfold_cv, mse, train_test_indices, CvGrid,
    DEFAULT_FOLDS,
};
use crate::io::{self, Model};
use crate::simulate::{gen_dataset, SimSpec};
use crate::tensor::{outer_product, DenseTensor};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fastr", version, about = "Sparse unit-rank tensor regression")]
struct Cli {
    /// Worker threads for data-parallel kernels (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic unit-rank regression problem.
    Simulate(SimulateArgs),
    /// Fit a model to samples and responses.
    Fit(FitArgs),
    /// Predict responses for samples with a fitted model.
    Predict(PredictArgs),
    /// Score a model on labelled samples.
    Eval(EvalArgs),
    /// k-fold cross-validation over a (lambda, epsilon) grid.
    Cv(CvArgs),
    /// Seeded train/test split of a dataset.
    Split(SplitArgs),
    /// Time the fit phases over a ladder of shapes.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Tensor shape, e.g. 20,20 or 5,5,5.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long)]
    n: usize,
    /// Percentage of zeroed entries per factor.
    #[arg(long, default_value_t = 20.0)]
    sparsity: f64,
    /// Noise scale.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Sample file (FTRT, leading dim = sample count).
    #[arg(long)]
    samples: PathBuf,
    /// Response CSV, one value per line.
    #[arg(long)]
    responses: PathBuf,
}

#[derive(Debug, Args)]
struct LoopArgs {
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Seed for initialization (and fold assignment in cross-validation).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rescale factors to equal norm after each sweep.
    #[arg(long)]
    balance: bool,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Lambda grid (default: 7 log-spaced points in [1e-4, 1e1]).
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    /// Epsilon grid (default: 1e-3 … 1e2 by decades).
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
}

impl GridArgs {
    fn grid(&self) -> CvGrid {
        let d = CvGrid::default();
        CvGrid::new(
            self.lambdas.clone().unwrap_or(d.lambdas),
            self.epsilons.clone().unwrap_or(d.epsilons),
            self.folds,
        )
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Pick lambda and epsilon by cross-validation first.
    #[arg(long, conflicts_with_all = ["lambda", "epsilon"])]
    cv: bool,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    fit: LoopArgs,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Convergence trace CSV (default: <out>.trace.csv).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Ground-truth coefficient tensor; enables the coefficient error.
    #[arg(long)]
    true_tensor: Option<PathBuf>,
    /// Metrics CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write predictions here.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    fit: LoopArgs,
    /// Long-form CSV: lambda,epsilon,fold,mse.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Cube side lengths; each rung has shape side^order.
    #[arg(long, value_delimiter = ',', conflicts_with = "shapes")]
    cubes: Option<Vec<usize>>,
    #[arg(long, default_value_t = 3)]
    order: usize,
    /// Explicit shapes separated by ';', e.g. "10,10;20,20".
    #[arg(long)]
    shapes: Option<String>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Sweeps per fit (early stopping is disabled).
    #[arg(long, default_value_t = 5)]
    iters: usize,
    /// Runs per rung; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter { .. } => EXIT_USAGE,
            Error::Numeric(_) => EXIT_NUMERIC,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// One per run, written next to the primary output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timings: BTreeMap::new(),
        }
    }

    fn input(&mut self, name: &str, p: &Path) -> &mut Self {
        self.inputs.insert(name.into(), p.display().to_string());
        self
    }

    fn output(&mut self, name: &str, p: &Path) -> &mut Self {
        self.outputs.insert(name.into(), p.display().to_string());
        self
    }

    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings
            .insert(phase.into(), t.elapsed().as_secs_f64());
        out
    }

    fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).map_err(Error::from)?;
        std::fs::write(path, text).map_err(Error::from)?;
        Ok(())
    }
}

/// `<path>.manifest.json`
fn manifest_path(primary: &Path) -> PathBuf {
    let mut s = primary.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn load_dataset(args: &DataArgs) -> CliResult<Dataset> {
    let samples = io::read_samples(&args.samples)?;
    let responses = io::read_column(&args.responses)?;
    Ok(Dataset::new(samples, responses)?)
}

fn fit_template(args: &LoopArgs, lambda: f64, epsilon: f64) -> FitConfig {
    FitConfig {
        lambda,
        epsilon,
        max_iter: args.max_iter,
        tol: args.tol,
        seed: args.seed,
        balance: args.balance,
    }
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    let spec = SimSpec {
        dims: a.dims.clone(),
        n_samples: a.n,
        sparsity_pct: a.sparsity,
        noise_alpha: a.alpha,
        seed: a.seed,
    };
    spec.validate()
        .map_err(|e| CliError::usage(e.to_string()))?;
    let mut manifest = RunManifest::new("simulate", json(&spec));
    let out = manifest.time("generate", || gen_dataset(&spec))?;

    std::fs::create_dir_all(&a.out).map_err(Error::from)?;
    let samples = a.out.join("samples.ftrt");
    let responses = a.out.join("responses.csv");
    let factors = a.out.join("true_factors.ftrt");
    let tensor = a.out.join("true_tensor.ftrt");
    manifest.time("write", || -> CliResult<()> {
        io::write_samples(&samples, out.dataset.samples())?;
        io::write_column(&responses, "y", out.dataset.responses())?;
        // factors concatenated in mode order; split by the true tensor's dims
        let flat: Vec<f64> = out.true_factors.factors().concat();
        io::write_tensor(&factors, &DenseTensor::new(vec![flat.len()], flat)?)?;
        io::write_tensor(&tensor, &out.true_tensor)?;
        Ok(())
    })?;
    manifest
        .output("samples", &samples)
        .output("responses", &responses)
        .output("true_factors", &factors)
        .output("true_tensor", &tensor);
    manifest.write(&a.out.join("manifest.json"))
}

fn cmd_fit(a: &FitArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("fit", serde_json::Value::Null);
    let data = manifest.time("load", || load_dataset(&a.data))?;

    let (lambda, epsilon) = if a.cv {
        let grid = a.grid.grid();
        let template = fit_template(&a.fit, 0.0, 1.0);
        let cv = manifest.time("cv", || kfold_cv(&data, &grid, &template))?;
        (cv.best_lambda, cv.best_epsilon)
    } else {
        match (a.lambda, a.epsilon) {
            (Some(l), Some(e)) => (l, e),
            _ => return Err(CliError::usage("--lambda and --epsilon are required unless --cv is given")),
        }
    };
    let cfg = fit_template(&a.fit, lambda, epsilon);
    cfg.validate()?;
    manifest.config = json(&cfg);

    let report = manifest.time("fit", || fit(&data, &cfg))?;
    let trace_path = a.trace.clone().unwrap_or_else(|| {
        let mut s = a.out.as_os_str().to_owned();
        s.push(".trace.csv");
        PathBuf::from(s)
    });
    io::write_csv(
        &trace_path,
        &["iteration", "rel_change"],
        report
            .rel_change_trace
            .iter()
            .enumerate()
            .map(|(i, r)| [(i + 1).to_string(), r.to_string()]),
    )?;
    let model = Model::new(report, cfg);
    model.save(&a.out)?;
    eprintln!(
        "fit: lambda={} epsilon={} iterations={} converged={}",
        lambda, epsilon, model.report.iterations, model.report.converged
    );

    manifest
        .input("samples", &a.data.samples)
        .input("responses", &a.data.responses)
        .output("model", &a.out)
        .output("trace", &trace_path);
    manifest.write(&manifest_path(&a.out))
}

fn cmd_predict(a: &PredictArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("predict", serde_json::Value::Null);
    let model = Model::load(&a.model)?;
    manifest.config = json(&model.config);
    let samples = io::read_samples(&a.samples)?;
    let y_hat = manifest.time("predict", || predict(model.factors(), &samples))?;
    io::write_column(&a.out, "y_hat", &y_hat)?;
    manifest
        .input("model", &a.model)
        .input("samples", &a.samples)
        .output("predictions", &a.out);
    manifest.write(&manifest_path(&a.out))
}

fn cmd_eval(a: &EvalArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("eval", serde_json::Value::Null);
    let model = Model::load(&a.model)?;
    manifest.config = json(&model.config);
    let data = load_dataset(&a.data)?;
    let y_hat = manifest.time("predict", || predict(model.factors(), data.samples()))?;

    let mut metrics: Vec<(&str, f64)> = vec![("mse", mse(&y_hat, data.responses())?)];
    if let Some(p) = &a.true_tensor {
        let w_star = io::read_tensor(p)?;
        let w_hat = outer_product(model.factors());
        metrics.push(("ce", coefficient_error(&w_hat, &w_star)?));
        manifest.input("true_tensor", p);
    }
    if let Some(labels) = binary_labels(data.responses()) {
        metrics.push(("auc", auc(&y_hat, &labels)?));
    }

    io::write_csv(
        &a.out,
        &["metric", "value"],
        metrics.iter().map(|(k, v)| [k.to_string(), v.to_string()]),
    )?;
    if let Some(p) = &a.predictions {
        io::write_column(p, "y_hat", &y_hat)?;
        manifest.output("predictions", p);
    }
    let summary: Vec<String> = metrics.iter().map(|(k, v)| format!("{k}={v}")).collect();
    println!("{}", summary.join(" "));

    manifest
        .input("model", &a.model)
        .input("samples", &a.data.samples)
        .input("responses", &a.data.responses)
        .output("metrics", &a.out);
    manifest.write(&manifest_path(&a.out))
}

fn cmd_cv(a: &CvArgs) -> CliResult<()> {
    let grid = a.grid.grid();
    grid.validate()?;
    let template = fit_template(&a.fit, 0.0, 1.0);
    let mut manifest = RunManifest::new(
        "cv",
        serde_json::json!({ "grid": json(&grid), "template": json(&template) }),
    );
    let data = load_dataset(&a.data)?;
    let cv = manifest.time("cv", || kfold_cv(&data, &grid, &template))?;

    let mut rows = Vec::new();
    for (li, lambda) in grid.lambdas.iter().enumerate() {
        for (ei, epsilon) in grid.epsilons.iter().enumerate() {
            for (fold, score) in cv.fold_scores[li][ei].iter().enumerate() {
                rows.push([
                    lambda.to_string(),
                    epsilon.to_string(),
                    fold.to_string(),
                    score.to_string(),
                ]);
            }
        }
    }
    io::write_csv(&a.out, &["lambda", "epsilon", "fold", "mse"], rows)?;
    println!(
        "best_lambda={} best_epsilon={} best_mse={}",
        cv.best_lambda, cv.best_epsilon, cv.best_score
    );

    manifest
        .input("samples", &a.data.samples)
        .input("responses", &a.data.responses)
        .output("scores", &a.out);
    manifest.write(&manifest_path(&a.out))
}

fn cmd_split(a: &SplitArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new(
        "split",
        serde_json::json!({ "train_fraction": a.train_fraction, "seed": a.seed }),
    );
    let data = load_dataset(&a.data)?;
    let (train_idx, test_idx) = train_test_indices(data.len(), a.train_fraction, a.seed)?;
    std::fs::create_dir_all(&a.out).map_err(Error::from)?;
    for (name, idx) in [("train", &train_idx), ("test", &test_idx)] {
        let part = data.select(idx)?;
        let s = a.out.join(format!("{name}_samples.ftrt"));
        let r = a.out.join(format!("{name}_responses.csv"));
        io::write_samples(&s, part.samples())?;
        io::write_column(&r, "y", part.responses())?;
        manifest
            .output(&format!("{name}_samples"), &s)
            .output(&format!("{name}_responses"), &r);
    }
    manifest
        .input("samples", &a.data.samples)
        .input("responses", &a.data.responses);
    manifest.write(&a.out.join("manifest.json"))
}

fn parse_shapes(a: &BenchArgs) -> CliResult<Vec<Vec<usize>>> {
    if let Some(sides) = &a.cubes {
        if a.order == 0 {
            return Err(CliError::usage("--order must be >= 1"));
        }
        return Ok(sides.iter().map(|&s| vec![s; a.order]).collect());
    }
    let Some(spec) = &a.shapes else {
        return Err(CliError::usage("one of --cubes or --shapes is required"));
    };
    spec.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.split(',')
                .map(|d| d.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| CliError::usage(format!("bad shape {s:?}: {e}")))
        })
        .collect()
}

/// Timing of one bench rung.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub shape: String,
    pub n: usize,
    pub iterations: usize,
    /// `max_m ∏_{m'≠m} p_{m'}`
    pub contraction_size: usize,
    pub projection_s: f64,
    pub solve_s: f64,
    pub threshold_s: f64,
    pub total_s: f64,
}

fn cmd_bench(a: &BenchArgs) -> CliResult<()> {
    let shapes = parse_shapes(a)?;
    if shapes.is_empty() {
        return Err(CliError::usage("empty shape ladder"));
    }
    if a.repeats == 0 {
        return Err(CliError::usage("--repeats must be >= 1"));
    }
    let cfg = FitConfig {
        lambda: a.lambda,
        epsilon: a.epsilon,
        max_iter: a.iters,
        seed: a.seed,
        ..FitConfig::default()
    };
    cfg.validate()?;
    let mut manifest = RunManifest::new(
        "bench",
        serde_json::json!({ "shapes": shapes, "n": a.n, "repeats": a.repeats, "fit": json(&cfg) }),
    );

    let mut rows = Vec::new();
    for dims in &shapes {
        let spec = SimSpec {
            dims: dims.clone(),
            n_samples: a.n,
            sparsity_pct: 20.0,
            noise_alpha: 0.1,
            seed: a.seed,
        };
        spec.validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        let data = gen_dataset(&spec)?.dataset;
        let mut best: Option<(crate::estimator::PhaseTimings, usize)> = None;
        for _ in 0..a.repeats {
            let (report, t) = fit_instrumented(&data, &cfg, false)?;
            if best.is_none_or(|(b, _)| t.total() < b.total()) {
                best = Some((t, report.iterations));
            }
        }
        let (t, iterations) = best.expect("repeats >= 1");
        let total: usize = dims.iter().product();
        let contraction_size = dims.iter().map(|d| total / d).max().unwrap_or(1);
        let row = BenchRow {
            shape: dims
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join("x"),
            n: a.n,
            iterations,
            contraction_size,
            projection_s: t.projection.as_secs_f64(),
            solve_s: t.solve.as_secs_f64(),
            threshold_s: t.threshold.as_secs_f64(),
            total_s: t.total().as_secs_f64(),
        };
        eprintln!(
            "bench {}: projection {:.4}s solve {:.4}s threshold {:.6}s",
            row.shape, row.projection_s, row.solve_s, row.threshold_s
        );
        manifest
            .timings
            .insert(format!("fit_{}", row.shape), row.total_s);
        rows.push(row);
    }

    io::write_csv(
        &a.out,
        &[
            "shape",
            "n",
            "iterations",
            "contraction_size",
            "projection_s",
            "solve_s",
            "threshold_s",
            "total_s",
        ],
        rows.iter().map(|r| {
            [
                r.shape.clone(),
                r.n.to_string(),
                r.iterations.to_string(),
                r.contraction_size.to_string(),
                r.projection_s.to_string(),
                r.solve_s.to_string(),
                r.threshold_s.to_string(),
                r.total_s.to_string(),
            ]
        }),
    )?;
    manifest.output("timings", &a.out);
    manifest.write(&manifest_path(&a.out))
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Split(a) => cmd_split(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return EXIT_USAGE;
        }
        // fails only if a global pool already exists, which is harmless here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
