use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mortau::harness::{
    load_model, load_system, rows_to_csv, rows_to_json, run_benchmark, run_single, save_model,
    write_trajectory, Algorithm, BenchmarkSpec, ModelSource, ResultRow, SCHEMA_VERSION,
    TRAJECTORY_POINTS,
};
use mortau::metrics::{error_trajectory, optimality_residuals};
use mortau::reducers::{ReductionConfig, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use mortau::verification::{
    check_limit_consistency, prop1_suite, synthetic_system, theorem2_suite, theorem3_suite,
    trend_suite, TheoremCheckResult,
};
use mortau::MorError;

const SEED_ENV: &str = "MORTAU_SEED";

#[derive(Parser)]
#[command(name = "mortau", version, about = "Time-limited H2-optimal model order reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Prop1,
    Theorem2,
    Theorem3,
    Trend,
    Limit,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce one model with one algorithm and print the result row.
    Reduce {
        /// `fom`, `synthetic[:n[:m[:p[:seed]]]]`, a data-set name such as
        /// `beam`, a directory with A/B/C files, or `A.mtx,B.mtx,C.mtx`.
        #[arg(long)]
        model: String,
        #[arg(long)]
        order: usize,
        /// Time horizon; required except for irka, where it only sets the
        /// evaluation horizon.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, default_value = "lt-irka")]
        algo: String,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
        max_iters: usize,
        /// Falls back to the MORTAU_SEED environment variable, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the result row here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Save the reduced model as JSON (usable with `residuals`).
        #[arg(long)]
        save_model: Option<PathBuf>,
        /// Write the impulse-response error trajectory (t, error_norm).
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Run a benchmark specification (TOML).
    Bench {
        spec: PathBuf,
        /// Override the spec's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the spec's seed (MORTAU_SEED is used when the spec has none).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run the identity and model-level verification suites.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Print the optimality residuals of a stored reduced model.
    Residuals {
        #[arg(long)]
        model: String,
        /// Reduced model JSON written by `reduce --save-model`.
        #[arg(long)]
        rom: PathBuf,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

/// Failure classes mapped to exit codes.
enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<MorError> for CliError {
    fn from(e: MorError) -> Self {
        match e {
            MorError::InvalidConfig(_) | MorError::Parse { .. } | MorError::Serialization(_) => {
                CliError::Usage(e.to_string())
            }
            MorError::Io { .. } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render_rows(rows: &[ResultRow], format: Format) -> Result<String, CliError> {
    Ok(match format {
        Format::Csv => rows_to_csv(rows)?,
        Format::Json => rows_to_json(rows)? + "\n",
    })
}

fn render_table<T: Serialize>(items: &[T], format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for item in items {
                w.serialize(item).map_err(|e| CliError::Runtime(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
            Ok(String::from_utf8_lossy(&bytes).into_owned())
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a, T> {
                schema_version: u32,
                rows: &'a [T],
            }
            let doc = Doc {
                schema_version: SCHEMA_VERSION,
                rows: items,
            };
            serde_json::to_string_pretty(&doc)
                .map(|s| s + "\n")
                .map_err(|e| CliError::Runtime(e.to_string()))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn reduce(
    model: &str,
    order: usize,
    tau: Option<f64>,
    algo: &str,
    tol: f64,
    max_iters: usize,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Format,
    save: Option<PathBuf>,
    trajectory: Option<PathBuf>,
) -> Result<bool, CliError> {
    let algorithm: Algorithm = algo.parse()?;
    let seed = resolve_seed(seed)?.unwrap_or(0);
    if tau.is_none() && algorithm.needs_horizon() {
        return Err(CliError::Usage(format!("--tau is required for {algorithm}")));
    }
    let sys = load_system(&ModelSource::parse(model))?;
    let tau = match tau {
        Some(t) => t,
        None if !algorithm.needs_horizon() => 200.0 / sys.spectral_abscissa().abs().max(1e-12),
        None => return Err(CliError::Usage(format!("--tau is required for {algorithm}"))),
    };
    let config = ReductionConfig::new(order)
        .with_tolerance(tol)
        .with_max_iterations(max_iters)
        .with_seed(seed);
    // Reject bad settings as usage errors before any work is done.
    if order == 0 || order > sys.order() || !(tol > 0.0) || max_iters == 0 || !(tau > 0.0 && tau.is_finite()) {
        return Err(CliError::Usage(format!(
            "need 1 <= --order <= {}, --tol > 0, --max-iters >= 1 and --tau > 0",
            sys.order()
        )));
    }
    let outcome = run_single(&sys, algorithm, tau, &config);
    if let (Some(path), Some(m)) = (&save, &outcome.model) {
        save_model(path, m)?;
    }
    if let (Some(path), Some(m)) = (&trajectory, &outcome.model) {
        write_trajectory(path, &error_trajectory(&sys, m, tau, TRAJECTORY_POINTS)?)?;
    }
    emit(out.as_ref(), &render_rows(std::slice::from_ref(&outcome.row), format)?)?;
    if outcome.row.failed() {
        eprintln!("{algorithm} failed: {}", outcome.row.message);
    }
    Ok(!outcome.row.failed())
}

fn bench(spec: PathBuf, out: Option<PathBuf>, seed: Option<u64>, format: Format) -> Result<bool, CliError> {
    let mut spec = BenchmarkSpec::from_file(&spec)?;
    if let Some(o) = out {
        spec.output_path = o;
    }
    if let Some(s) = resolve_seed(seed)? {
        if seed.is_some() || spec.seed == 0 {
            spec.seed = s;
        }
    }
    let report = run_benchmark(&spec)?;
    emit(None, &render_rows(&report.rows, format)?)?;
    eprintln!(
        "wrote {} and {} ({} trajectories)",
        report.csv_path.display(),
        report.json_path.display(),
        report.trajectory_paths.len()
    );
    Ok(!report.rows.iter().any(|r| r.failed()))
}

fn verify(suite: Suite, seed: Option<u64>, out: Option<PathBuf>, format: Format) -> Result<bool, CliError> {
    let seed = resolve_seed(seed)?.unwrap_or(0);
    let wants = |s: Suite| suite == s || suite == Suite::All;
    let mut results: Vec<TheoremCheckResult> = Vec::new();
    if wants(Suite::Prop1) {
        results.extend(prop1_suite(seed, 50)?);
    }
    if wants(Suite::Theorem2) {
        results.extend(theorem2_suite(seed, 20)?);
    }
    if wants(Suite::Theorem3) {
        results.extend(theorem3_suite(seed, 5));
    }
    if wants(Suite::Trend) {
        results.extend(trend_suite(seed, 10));
    }
    if wants(Suite::Limit) {
        for k in 0..2 {
            let sys = synthetic_system(seed, k);
            let config = ReductionConfig::new(4).with_seed(seed);
            results.push(
                check_limit_consistency(&sys, &config).unwrap_or_else(|e| {
                    mortau::verification::failed_check("limit", sys.label.clone(), &e, 0.01)
                }),
            );
        }
    }
    emit(out.as_ref(), &render_table(&results, format)?)?;
    let failed = results.iter().filter(|r| !r.pass).count();
    eprintln!("{} checks, {failed} failed", results.len());
    Ok(failed == 0)
}

#[derive(Serialize)]
struct ResidualRow {
    shift_re: f64,
    shift_im: f64,
    right_tangential: Option<f64>,
    left_tangential: Option<f64>,
    bitangential: Option<f64>,
}

fn residuals(model: &str, rom: PathBuf, tau: f64, out: Option<PathBuf>, format: Format) -> Result<bool, CliError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(CliError::Usage("--tau must be positive".into()));
    }
    let sys = load_system(&ModelSource::parse(model))?;
    let reduced = load_model(&rom)?;
    let res = optimality_residuals(&sys, &reduced, tau)?;
    let rows: Vec<ResidualRow> = res
        .shifts
        .iter()
        .enumerate()
        .map(|(i, s)| ResidualRow {
            shift_re: s.re,
            shift_im: s.im,
            right_tangential: res.right_tangential[i],
            left_tangential: res.left_tangential[i],
            bitangential: res.bitangential[i],
        })
        .collect();
    emit(out.as_ref(), &render_table(&rows, format)?)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Reduce {
            model,
            order,
            tau,
            algo,
            tol,
            max_iters,
            seed,
            out,
            format,
            save_model,
            trajectory,
        } => reduce(&model, order, tau, &algo, tol, max_iters, seed, out, format, save_model, trajectory),
        Command::Bench { spec, out, seed, format } => bench(spec, out, seed, format),
        Command::Verify { suite, seed, out, format } => verify(suite, seed, out, format),
        Command::Residuals {
            model,
            rom,
            tau,
            out,
            format,
        } => residuals(&model, rom, tau, out, format),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `mortau --help` for usage");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
