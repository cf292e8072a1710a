//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 input or parse error,
//! 3 validation error. Diagnostics go to the error stream; output files
//! are written only after the whole computation succeeded.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{self, AttributionOutput, EngineError, Mode, RunOptions, RunStats};
use crate::model::{self, Dataset, DatasetError, Ensemble, ModelError};
use crate::output::{interactions_csv, pack_stats_table, shap_csv, PackStatsLine};
use crate::packing::{self, Algorithm};
use crate::pathdecomp::{decompose, UniquePath};
use crate::reference;
use crate::selftest::{run_selftest, SelftestOptions};
use crate::synth::{complete_ensemble, random_ensemble, random_row, EnsembleShape};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        if e.is_parse_error() {
            CliError::Input(format!("model: {e}"))
        } else {
            CliError::Validation(format!("model: {e}"))
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::NonFinite { .. } => CliError::Validation(format!("data: {e}")),
            _ => CliError::Input(format!("data: {e}")),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Pool(_) => CliError::Internal(e.to_string()),
            EngineError::NoWorkers => CliError::Input(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pathshap", version, about = "Exact SHAP values for decision-tree ensembles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-row SHAP values, one CSV line per input row
    Shap(ExplainArgs),
    /// Per-row SHAP interaction matrices
    Interactions(ExplainArgs),
    /// Bins and utilisation of every packing algorithm
    PackStats(PackStatsArgs),
    /// Randomized oracle-equivalence suite
    Selftest(SelftestArgs),
    /// Rows per second on a synthetic ensemble (informational only)
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelFormat {
    Native,
    XgboostDump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Engine,
    Reference,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model file
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelFormat::Native)]
    pub model_format: ModelFormat,
    /// Number of output groups; required for xgboost-dump
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub num_class: Option<u64>,
    /// Replaces the model's base score
    #[arg(long, allow_negative_numbers = true)]
    pub base_score: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// CSV of feature rows
    #[arg(long)]
    pub data: PathBuf,
    /// The first CSV line is a header
    #[arg(long)]
    pub header: bool,
    #[arg(long, default_value_t = Algorithm::BestFitDecreasing)]
    pub packing: Algorithm,
    #[arg(long, value_enum, default_value_t = Backend::Engine)]
    pub backend: Backend,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print run counters as JSON on stderr
    #[arg(long)]
    pub stats: bool,
}

#[derive(Debug, Args)]
pub struct PackStatsArgs {
    #[arg(long, required_unless_present = "synthetic_trees")]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelFormat::Native)]
    pub model_format: ModelFormat,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub num_class: Option<u64>,
    /// Use this many complete trees instead of a model file
    #[arg(long, conflicts_with = "model", requires = "synthetic_depth")]
    pub synthetic_trees: Option<usize>,
    /// Depth of the synthetic complete trees
    #[arg(long, requires = "synthetic_trees")]
    pub synthetic_depth: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cases per suite
    #[arg(long, default_value_t = 100)]
    pub cases: usize,
    #[arg(long, hide = true, default_value_t = 0.0)]
    pub inject_perturbation: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    #[arg(long, default_value_t = 32)]
    pub features: usize,
    #[arg(long, default_value_t = 2000)]
    pub rows: usize,
    #[arg(long, default_value_t = Algorithm::BestFitDecreasing)]
    pub packing: Algorithm,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    #[arg(long)]
    pub interactions: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_INPUT
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(&cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Shap(args) => explain(args, Mode::Shap, stdout, stderr),
        Command::Interactions(args) => explain(args, Mode::Interactions, stdout, stderr),
        Command::PackStats(args) => pack_stats(args, stdout),
        Command::Selftest(args) => selftest(args, stdout),
        Command::Bench(args) => bench(args, stdout),
    }
}

fn read_text(path: &Path, what: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{what} {}: {e}", path.display())))
}

fn load_model(path: &Path, format: ModelFormat, num_class: Option<u64>) -> Result<Ensemble, CliError> {
    let text = read_text(path, "model")?;
    match (format, num_class) {
        (ModelFormat::Native, None) => Ok(model::parse_native_model(&text)?),
        (ModelFormat::Native, Some(_)) => {
            Err(CliError::Input("--num-class applies to xgboost-dump models only".into()))
        }
        (ModelFormat::XgboostDump, Some(k)) => Ok(model::parse_xgboost_dump(&text, k as usize)?),
        (ModelFormat::XgboostDump, None) => {
            Err(CliError::Input("--num-class is required for xgboost-dump models".into()))
        }
    }
}

/// Reconciles the model width with the dataset. Dumps do not record the
/// feature count, so a dump model is widened to the dataset.
fn fit_to_data(ensemble: Ensemble, format: ModelFormat, data: &Dataset) -> Result<Ensemble, CliError> {
    let mismatch = || {
        CliError::Validation(format!(
            "dataset has {} columns but the model expects {} features",
            data.cols(),
            ensemble.num_features()
        ))
    };
    if data.cols() == ensemble.num_features() {
        Ok(ensemble)
    } else if format == ModelFormat::XgboostDump && data.cols() > ensemble.num_features() {
        Ok(ensemble.with_num_features(data.cols())?)
    } else {
        Err(mismatch())
    }
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Input(format!("output {}: {e}", path.display())))
        }
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::Internal(format!("stdout: {e}"))),
    }
}

fn explain(args: &ExplainArgs, mode: Mode, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let m = &args.model;
    let mut ensemble = load_model(&m.model, m.model_format, m.num_class)?;
    if let Some(b) = m.base_score {
        ensemble = ensemble.with_base_score(b)?;
    }
    let data = model::load_dataset(&read_text(&args.data, "data")?, args.header)?;
    let ensemble = fit_to_data(ensemble, m.model_format, &data)?;

    let (output, stats) = match args.backend {
        Backend::Engine => {
            let options =
                RunOptions { packing: args.packing, workers: args.workers as usize, mode, ..RunOptions::default() };
            let run = engine::run(&ensemble, &data, &options)?;
            (run.output, run.stats)
        }
        Backend::Reference => reference_run(&ensemble, &data, mode)?,
    };
    let text = match mode {
        Mode::Shap => shap_csv(&output),
        Mode::Interactions => interactions_csv(&output),
    };
    emit(&text, args.out.as_deref(), stdout)?;
    if args.stats {
        let json = serde_json::to_string(&stats).map_err(|e| CliError::Internal(e.to_string()))?;
        let _ = writeln!(stderr, "{json}");
    }
    Ok(EXIT_OK)
}

/// Oracle backend: recursive SHAP, brute-force interactions. Work counters
/// and packing fields of the stats are zero.
fn reference_run(ensemble: &Ensemble, data: &Dataset, mode: Mode) -> Result<(AttributionOutput, RunStats), CliError> {
    let start = Instant::now();
    let groups = ensemble.num_groups();
    let width = ensemble.num_features() + 1;
    let mut phis = Vec::with_capacity(data.rows() * groups * width);
    let mut matrices = Vec::new();
    for r in 0..data.rows() {
        let row = data.row(r);
        match mode {
            Mode::Shap => phis.extend(reference::treeshap_recursive(ensemble, row).into_iter().flatten()),
            Mode::Interactions => {
                let per_group = reference::interaction_bruteforce(ensemble, row)
                    .map_err(|e| CliError::Validation(format!("reference backend: {e}")))?;
                for matrix in per_group {
                    phis.extend((0..width).map(|i| matrix[i * width..(i + 1) * width].iter().sum::<f64>()));
                    matrices.extend(matrix);
                }
            }
        }
    }
    let output = AttributionOutput {
        rows: data.rows(),
        groups,
        num_features: ensemble.num_features(),
        phis,
        interactions: (mode == Mode::Interactions).then_some(matrices),
    };
    let stats = RunStats {
        extend_steps: 0,
        conditioned_evals: 0,
        bins: 0,
        utilisation: 0.0,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((output, stats))
}

fn pack_stats(args: &PackStatsArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let ensemble = match (&args.model, args.synthetic_trees, args.synthetic_depth) {
        (Some(path), _, _) => load_model(path, args.model_format, args.num_class)?,
        (None, Some(trees), Some(depth)) => {
            if depth >= model::MAX_DEPTH {
                return Err(CliError::Validation(format!("synthetic depth must be below {}", model::MAX_DEPTH)));
            }
            complete_ensemble(trees, depth)
        }
        _ => return Err(CliError::Input("either --model or --synthetic-trees/--synthetic-depth is required".into())),
    };
    let paths = decompose(&ensemble).map_err(|e| CliError::Validation(e.to_string()))?;
    let sizes: Vec<usize> = paths.iter().map(UniquePath::len).collect();
    let mut lines = Vec::new();
    for algorithm in Algorithm::ALL {
        let start = Instant::now();
        let plan = packing::pack(algorithm, &sizes).map_err(|e| CliError::Validation(e.to_string()))?;
        let time_seconds = start.elapsed().as_secs_f64();
        lines.push(PackStatsLine { algorithm, time_seconds, utilisation: plan.utilisation, bins: plan.num_bins() });
    }
    emit(&pack_stats_table(&lines), args.out.as_deref(), stdout)?;
    Ok(EXIT_OK)
}

fn selftest(args: &SelftestArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let options = SelftestOptions { seed: args.seed, cases: args.cases, perturbation: args.inject_perturbation };
    let report = run_selftest(&options);
    emit(&report.to_string(), None, stdout)?;
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_INTERNAL })
}

fn bench(args: &BenchArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    if args.depth >= model::MAX_DEPTH {
        return Err(CliError::Validation(format!("depth must be below {}", model::MAX_DEPTH)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let shape = EnsembleShape {
        trees: args.trees,
        max_depth: args.depth,
        features: args.features.max(1),
        leaf_probability: 0.0,
        ..EnsembleShape::default()
    };
    let ensemble = random_ensemble(&mut rng, &shape);
    let rows: Vec<Vec<f64>> = (0..args.rows).map(|_| random_row(&mut rng, ensemble.num_features())).collect();
    let data = Dataset::from_rows(&rows)?;
    let mode = if args.interactions { Mode::Interactions } else { Mode::Shap };
    let options = RunOptions { packing: args.packing, workers: args.workers as usize, mode, ..RunOptions::default() };
    let run = engine::run(&ensemble, &data, &options)?;
    let seconds = run.stats.wall_time_seconds;
    let text = format!(
        "rows,seconds,rows_per_second,bins,utilisation\n{},{:.6},{:.1},{},{:.6}\n",
        args.rows,
        seconds,
        args.rows as f64 / seconds.max(f64::MIN_POSITIVE),
        run.stats.bins,
        run.stats.utilisation
    );
    emit(&text, None, stdout)?;
    Ok(EXIT_OK)
}
