//! Benchmark plumbing: model loading, benchmark specifications, result rows
//! and their serialization, and the batch runner behind the CLI.

pub mod matrix_market;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};
use crate::metrics::{error_trajectory, h2tau_error, optimality_residuals};
use crate::models::{fom, random_system_with, SpectrumSpec};
use crate::reducers::{irka, lt_irka, tl_tsia, IterationTrace, ReductionConfig, DEFAULT_TOLERANCE};
use crate::system::{ReducedModel, StateSpaceSystem};

pub use matrix_market::{read_matrix, write_matrix_market};

/// Version of the result-table and JSON layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// Samples per error trajectory.
pub const TRAJECTORY_POINTS: usize = 1000;

/// Environment variable naming the directory that holds `<name>/A.mtx` etc.
pub const DATA_DIR_ENV: &str = "MORTAU_DATA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    LtIrka,
    Irka,
    TlTsia,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::LtIrka, Algorithm::Irka, Algorithm::TlTsia];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::LtIrka => "lt-irka",
            Algorithm::Irka => "irka",
            Algorithm::TlTsia => "tl-tsia",
        }
    }

    /// IRKA reduces on the infinite horizon; the others need `tau`.
    pub fn needs_horizon(self) -> bool {
        self != Algorithm::Irka
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = MorError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lt-irka" | "ltirka" => Ok(Algorithm::LtIrka),
            "irka" => Ok(Algorithm::Irka),
            "tl-tsia" | "tltsia" => Ok(Algorithm::TlTsia),
            "tl-bt" | "tl-pork" | "tl-cure" | "fhirka" => Err(MorError::InvalidConfig(format!(
                "algorithm '{s}' is not available in this implementation"
            ))),
            _ => Err(MorError::InvalidConfig(format!(
                "unknown algorithm '{s}' (expected lt-irka, irka or tl-tsia)"
            ))),
        }
    }
}

/// Where a full-order model comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    /// A built-in model (`fom`, `synthetic[:n[:m[:p[:seed]]]]`), a data-set
    /// name looked up under the data directory (`beam`, `iss`), or a
    /// directory holding `A`, `B`, `C` files.
    Named(String),
    /// Explicit files for the three matrices.
    Files { a: PathBuf, b: PathBuf, c: PathBuf },
}

impl ModelSource {
    /// Parses a CLI value: `a.mtx,b.mtx,c.mtx` for explicit files, anything
    /// else as a name.
    pub fn parse(value: &str) -> Self {
        let parts: Vec<&str> = value.split(',').map(str::trim).collect();
        if parts.len() == 3 {
            ModelSource::Files {
                a: parts[0].into(),
                b: parts[1].into(),
                c: parts[2].into(),
            }
        } else {
            ModelSource::Named(value.trim().to_string())
        }
    }

    fn resolved(&self, base: &Path) -> ModelSource {
        match self {
            ModelSource::Files { a, b, c } => ModelSource::Files {
                a: base.join(a),
                b: base.join(b),
                c: base.join(c),
            },
            named => named.clone(),
        }
    }
}

fn matrix_file(dir: &Path, name: &str) -> Option<PathBuf> {
    let lower = name.to_ascii_lowercase();
    ["mtx", "txt", "csv"]
        .iter()
        .flat_map(|ext| [dir.join(format!("{name}.{ext}")), dir.join(format!("{lower}.{ext}"))])
        .find(|p| p.is_file())
}

fn data_dirs(name: &str) -> Vec<PathBuf> {
    let mut dirs = Vec::new();
    if let Ok(root) = std::env::var(DATA_DIR_ENV) {
        dirs.push(Path::new(&root).join(name));
    }
    dirs.push(Path::new("data").join(name));
    dirs
}

/// Directory with `A`, `B`, `C` files for a named data set, if present.
pub fn find_data_set(name: &str) -> Option<PathBuf> {
    data_dirs(name)
        .into_iter()
        .find(|d| matrix_file(d, "A").is_some())
}

fn load_files(a: &Path, b: &Path, c: &Path, label: String) -> Result<StateSpaceSystem> {
    let a = read_matrix(a)?;
    let b = read_matrix(b)?;
    let c = read_matrix(c)?;
    StateSpaceSystem::new(a, b, c, label)
}

fn load_dir(dir: &Path, label: String) -> Result<StateSpaceSystem> {
    let find = |m: &str| {
        matrix_file(dir, m).ok_or_else(|| {
            MorError::InvalidConfig(format!("no {m}.mtx (or .txt/.csv) in {}", dir.display()))
        })
    };
    load_files(&find("A")?, &find("B")?, &find("C")?, label)
}

fn synthetic_from_name(name: &str) -> Result<Option<StateSpaceSystem>> {
    let mut parts = name.split(':');
    if parts.next() != Some("synthetic") {
        return Ok(None);
    }
    let mut fields = [20u64, 1, 1, 0];
    for (slot, part) in fields.iter_mut().zip(parts.by_ref()) {
        *slot = part.parse().map_err(|_| {
            MorError::InvalidConfig(format!("bad synthetic model spec '{name}' (synthetic:n:m:p:seed)"))
        })?;
    }
    if parts.next().is_some() || fields[..3].contains(&0) {
        return Err(MorError::InvalidConfig(format!(
            "bad synthetic model spec '{name}' (synthetic:n:m:p:seed)"
        )));
    }
    let [n, m, p, seed] = fields;
    let mut sys = random_system_with(n as usize, m as usize, p as usize, seed, SpectrumSpec::well_separated());
    sys.label = name.to_string();
    Ok(Some(sys))
}

/// Loads a full-order model. Relative file paths are taken as they are.
pub fn load_system(source: &ModelSource) -> Result<StateSpaceSystem> {
    match source {
        ModelSource::Files { a, b, c } => {
            let label = a
                .parent()
                .and_then(|p| p.file_name())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "model".into());
            load_files(a, b, c, label)
        }
        ModelSource::Named(name) => {
            if name == "fom" {
                return Ok(fom());
            }
            if let Some(sys) = synthetic_from_name(name)? {
                return Ok(sys);
            }
            let path = Path::new(name);
            if path.is_dir() {
                let label = path
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| name.clone());
                return load_dir(path, label);
            }
            match find_data_set(name) {
                Some(dir) => load_dir(&dir, name.clone()),
                None => Err(MorError::InvalidConfig(format!(
                    "unknown model '{name}': not built in, not a directory, and no data under {}",
                    data_dirs(name)
                        .iter()
                        .map(|d| d.display().to_string())
                        .collect::<Vec<_>>()
                        .join(" or ")
                ))),
            }
        }
    }
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

/// A batch of runs, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub model_source: ModelSource,
    pub reduced_order: usize,
    pub horizons: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    /// Output directory for the result table, JSON file and trajectories.
    pub output_path: PathBuf,
}

impl BenchmarkSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: BenchmarkSpec =
            toml::from_str(text).map_err(|e| MorError::Serialization(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a spec file; relative paths inside it are relative to the file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|e| MorError::io(&name, e))?;
        let mut spec = BenchmarkSpec::from_toml(&text).map_err(|e| match e {
            MorError::Serialization(msg) => MorError::Serialization(format!("{name}: {msg}")),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        spec.model_source = spec.model_source.resolved(base);
        if spec.output_path.is_relative() {
            spec.output_path = base.join(&spec.output_path);
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(MorError::InvalidConfig("at least one horizon is required".into()));
        }
        if let Some(t) = self.horizons.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(MorError::InvalidConfig(format!("horizons must be positive, got {t}")));
        }
        if self.algorithms.is_empty() {
            return Err(MorError::InvalidConfig("at least one algorithm is required".into()));
        }
        if self.reduced_order == 0 {
            return Err(MorError::InvalidConfig("reduced_order must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(MorError::InvalidConfig("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Converged,
    /// The iteration budget ran out; metrics are for the best iterate.
    MaxIterations,
    Failed,
}

/// One (model, algorithm, horizon) result. Field order is the column order
/// of the result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub schema_version: u32,
    pub model: String,
    pub algorithm: Algorithm,
    pub tau: f64,
    pub order: usize,
    pub abs_error: Option<f64>,
    pub rel_error: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub status: RowStatus,
    pub wall_seconds: f64,
    pub max_right_residual: Option<f64>,
    pub max_left_residual: Option<f64>,
    pub max_bitangential_residual: Option<f64>,
    pub message: String,
}

/// Header row of the result table.
pub const CSV_HEADER: [&str; 15] = [
    "schema_version",
    "model",
    "algorithm",
    "tau",
    "order",
    "abs_error",
    "rel_error",
    "iterations",
    "converged",
    "status",
    "wall_seconds",
    "max_right_residual",
    "max_left_residual",
    "max_bitangential_residual",
    "message",
];

impl ResultRow {
    pub fn failed(&self) -> bool {
        self.status == RowStatus::Failed
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let ser = |e: csv::Error| MorError::Serialization(e.to_string());
    w.write_record(CSV_HEADER).map_err(ser)?;
    for row in rows {
        w.serialize(row).map_err(ser)?;
    }
    let bytes = w.into_inner().map_err(|e| MorError::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| MorError::Serialization(e.to_string()))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| MorError::Serialization(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(MorError::Serialization(format!(
            "unexpected result-table header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(|e| MorError::Serialization(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub rows: Vec<ResultRow>,
}

pub fn rows_to_json(rows: &[ResultRow]) -> Result<String> {
    let doc = ResultDocument {
        schema_version: SCHEMA_VERSION,
        rows: rows.to_vec(),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| MorError::Serialization(e.to_string()))
}

pub fn rows_from_json(text: &str) -> Result<Vec<ResultRow>> {
    let doc: ResultDocument =
        serde_json::from_str(text).map_err(|e| MorError::Serialization(e.to_string()))?;
    Ok(doc.rows)
}

/// Everything one reduction run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub row: ResultRow,
    pub model: Option<ReducedModel>,
    pub trace: Option<IterationTrace>,
}

fn failed_row(sys: &StateSpaceSystem, algorithm: Algorithm, tau: f64, r: usize, message: String) -> ResultRow {
    ResultRow {
        schema_version: SCHEMA_VERSION,
        model: sys.label.clone(),
        algorithm,
        tau,
        order: r,
        abs_error: None,
        rel_error: None,
        iterations: 0,
        converged: false,
        status: RowStatus::Failed,
        wall_seconds: 0.0,
        max_right_residual: None,
        max_left_residual: None,
        max_bitangential_residual: None,
        message,
    }
}

/// Evaluates a reduction result at horizon `tau`: H2(tau) errors and the
/// optimality-residual summary. A driver that ran out of iterations still
/// yields a row, for its best iterate.
pub fn evaluate(
    sys: &StateSpaceSystem,
    algorithm: Algorithm,
    tau: f64,
    r: usize,
    result: Result<(ReducedModel, IterationTrace)>,
    wall_seconds: f64,
) -> RunOutcome {
    let (model, trace, status, message) = match result {
        Ok((m, t)) => (m, t, RowStatus::Converged, String::new()),
        Err(MorError::NoConvergence { trace, best }) => {
            let msg = format!("no convergence after {} iterations; best iterate reported", trace.records.len());
            (*best, *trace, RowStatus::MaxIterations, msg)
        }
        Err(e) => {
            let trace = e.trace().cloned();
            let mut row = failed_row(sys, algorithm, tau, r, e.to_string());
            row.iterations = trace.as_ref().map_or(0, |t| t.iterations());
            row.wall_seconds = wall_seconds;
            return RunOutcome {
                row,
                model: None,
                trace,
            };
        }
    };
    let mut row = failed_row(sys, algorithm, tau, r, message);
    row.iterations = trace.iterations();
    row.converged = trace.converged();
    row.wall_seconds = wall_seconds;
    match h2tau_error(sys, &model, tau) {
        Ok(e) => {
            row.abs_error = Some(e.absolute);
            row.rel_error = Some(e.relative);
            row.status = status;
        }
        Err(e) => row.message = format!("error evaluation failed: {e}"),
    }
    match optimality_residuals(sys, &model, tau) {
        Ok(res) => {
            row.max_right_residual = res.max_right();
            row.max_left_residual = res.max_left();
            row.max_bitangential_residual = res.max_bitangential();
        }
        Err(e) if row.message.is_empty() => row.message = format!("residuals unavailable: {e}"),
        Err(_) => {}
    }
    RunOutcome {
        row,
        model: Some(model),
        trace: Some(trace),
    }
}

/// Runs one algorithm on `sys`. `tau` is the evaluation horizon and, except
/// for IRKA, the reduction horizon.
pub fn run_single(sys: &StateSpaceSystem, algorithm: Algorithm, tau: f64, config: &ReductionConfig) -> RunOutcome {
    let config = config.clone().with_tau(tau);
    let started = Instant::now();
    let result = match algorithm {
        Algorithm::LtIrka => lt_irka(sys, &config),
        Algorithm::Irka => irka(sys, &config),
        Algorithm::TlTsia => tl_tsia(sys, &config, None),
    };
    evaluate(sys, algorithm, tau, config.reduced_order, result, started.elapsed().as_secs_f64())
}

/// File name of the trajectory for one row.
pub fn trajectory_file_name(row: &ResultRow) -> String {
    let clean: String = row
        .model
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    format!("{clean}_{}_r{}_tau{}.csv", row.algorithm, row.order, row.tau)
}

pub fn write_trajectory(path: &Path, samples: &[(f64, f64)]) -> Result<()> {
    let name = path.display().to_string();
    let mut w = csv::Writer::from_path(path).map_err(|e| MorError::Serialization(format!("{name}: {e}")))?;
    let ser = |e: csv::Error| MorError::Serialization(e.to_string());
    w.write_record(["t", "error_norm"]).map_err(ser)?;
    for (t, e) in samples {
        w.write_record([t.to_string(), e.to_string()]).map_err(ser)?;
    }
    w.flush().map_err(|e| MorError::io(&name, e))
}

/// Result of [`run_benchmark`].
#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub rows: Vec<ResultRow>,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub trajectory_paths: Vec<PathBuf>,
}

/// Runs every (algorithm, horizon) pair of `spec` in order, writes
/// `results.csv`, `results.json` and one trajectory file per successful run
/// under `spec.output_path`. A failing run becomes a `failed` row; it never
/// aborts the batch. IRKA does not depend on the horizon, so it is run once
/// and evaluated at every horizon; TL-TSIA starts from that IRKA model.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkReport> {
    spec.validate()?;
    let out = &spec.output_path;
    let traj_dir = out.join("trajectories");
    fs::create_dir_all(&traj_dir).map_err(|e| MorError::io(traj_dir.display().to_string(), e))?;

    let base = ReductionConfig::new(spec.reduced_order)
        .with_tolerance(spec.tolerance)
        .with_seed(spec.seed);
    let loaded = load_system(&spec.model_source);
    let mut rows = Vec::new();
    let mut trajectory_paths = Vec::new();
    let sys = match loaded {
        Ok(sys) => sys,
        Err(e) => {
            let label = match &spec.model_source {
                ModelSource::Named(n) => n.clone(),
                ModelSource::Files { a, .. } => a.display().to_string(),
            };
            let placeholder = StateSpaceSystem {
                a: nalgebra::DMatrix::zeros(0, 0),
                b: nalgebra::DMatrix::zeros(0, 0),
                c: nalgebra::DMatrix::zeros(0, 0),
                label,
            };
            for &algorithm in &spec.algorithms {
                for &tau in &spec.horizons {
                    rows.push(failed_row(&placeholder, algorithm, tau, spec.reduced_order, e.to_string()));
                }
            }
            return finish(out, rows, trajectory_paths);
        }
    };

    let mut irka_cache: Option<(Result<(ReducedModel, IterationTrace)>, f64)> = None;
    let irka_result = |cache: &mut Option<(Result<(ReducedModel, IterationTrace)>, f64)>| {
        if cache.is_none() {
            let started = Instant::now();
            let r = irka(&sys, &base);
            *cache = Some((r, started.elapsed().as_secs_f64()));
        }
        let (r, secs) = cache.as_ref().expect("filled");
        (r.clone(), *secs)
    };

    for &algorithm in &spec.algorithms {
        for &tau in &spec.horizons {
            let outcome = match algorithm {
                Algorithm::Irka => {
                    let (r, secs) = irka_result(&mut irka_cache);
                    evaluate(&sys, algorithm, tau, spec.reduced_order, r, secs)
                }
                Algorithm::TlTsia => {
                    let (start, _) = irka_result(&mut irka_cache);
                    let initial = match &start {
                        Ok((m, _)) => Some(m.clone()),
                        Err(e) => e.best_model().cloned(),
                    };
                    let config = base.clone().with_tau(tau);
                    let started = Instant::now();
                    let result = tl_tsia(&sys, &config, initial.as_ref());
                    evaluate(&sys, algorithm, tau, spec.reduced_order, result, started.elapsed().as_secs_f64())
                }
                Algorithm::LtIrka => run_single(&sys, algorithm, tau, &base),
            };
            if let Some(model) = &outcome.model {
                let path = traj_dir.join(trajectory_file_name(&outcome.row));
                match error_trajectory(&sys, model, tau, TRAJECTORY_POINTS) {
                    Ok(samples) => {
                        write_trajectory(&path, &samples)?;
                        trajectory_paths.push(path);
                    }
                    Err(e) => eprintln!("warning: no trajectory for {}: {e}", path.display()),
                }
            }
            rows.push(outcome.row);
        }
    }
    finish(out, rows, trajectory_paths)
}

fn finish(out: &Path, rows: Vec<ResultRow>, trajectory_paths: Vec<PathBuf>) -> Result<BenchmarkReport> {
    let csv_path = out.join("results.csv");
    let json_path = out.join("results.json");
    fs::write(&csv_path, rows_to_csv(&rows)?).map_err(|e| MorError::io(csv_path.display().to_string(), e))?;
    fs::write(&json_path, rows_to_json(&rows)?)
        .map_err(|e| MorError::io(json_path.display().to_string(), e))?;
    Ok(BenchmarkReport {
        rows,
        csv_path,
        json_path,
        trajectory_paths,
    })
}

/// Saves a reduced model as JSON.
pub fn save_model(path: &Path, model: &ReducedModel) -> Result<()> {
    let text = serde_json::to_string_pretty(model).map_err(|e| MorError::Serialization(e.to_string()))?;
    fs::write(path, text).map_err(|e| MorError::io(path.display().to_string(), e))
}

pub fn load_model(path: &Path) -> Result<ReducedModel> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| MorError::io(&name, e))?;
    serde_json::from_str(&text).map_err(|e| MorError::Serialization(format!("{name}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> ResultRow {
        ResultRow {
            schema_version: SCHEMA_VERSION,
            model: "toy, \"quoted\"".into(),
            algorithm: Algorithm::TlTsia,
            tau: 0.1,
            order: 3,
            abs_error: Some(1.0 / 3.0),
            rel_error: None,
            iterations: 7,
            converged: true,
            status: RowStatus::Converged,
            wall_seconds: 0.25,
            max_right_residual: Some(1e-300),
            max_left_residual: None,
            max_bitangential_residual: Some(2.5e-7),
            message: String::new(),
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let rows = vec![sample_row(), failed_row(&fom(), Algorithm::Irka, 2.0, 20, "boom".into())];
        let text = rows_to_csv(&rows).unwrap();
        assert!(text.starts_with(&CSV_HEADER.join(",")));
        assert_eq!(rows_from_csv(&text).unwrap(), rows);
        assert_eq!(rows_from_json(&rows_to_json(&rows).unwrap()).unwrap(), rows);
    }

    #[test]
    fn spec_parsing() {
        let spec = BenchmarkSpec::from_toml(
            r#"
model_source = "fom"
reduced_order = 20
horizons = [0.2, 2.0]
algorithms = ["lt-irka", "irka"]
output_path = "out"
"#,
        )
        .unwrap();
        assert_eq!(spec.model_source, ModelSource::Named("fom".into()));
        assert_eq!(spec.tolerance, DEFAULT_TOLERANCE);
        let files = BenchmarkSpec::from_toml(
            r#"
reduced_order = 2
horizons = [1.0]
algorithms = ["tl-tsia"]
tolerance = 1e-8
seed = 3
output_path = "out"
[model_source]
a = "A.mtx"
b = "B.mtx"
c = "C.mtx"
"#,
        )
        .unwrap();
        assert!(matches!(files.model_source, ModelSource::Files { .. }));
        assert!(BenchmarkSpec::from_toml("reduced_order = 2\nhorizons = []\nalgorithms = [\"irka\"]\nmodel_source = \"fom\"\noutput_path = \"o\"").is_err());
        assert!(BenchmarkSpec::from_toml("reduced_order = 2\nhorizons = [1.0]\nalgorithms = [\"irka\"]\nmodel_source = \"fom\"\noutput_path = \"o\"\nextra = 1").is_err());
    }

    #[test]
    fn algorithm_names() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("tl-bt".parse::<Algorithm>().is_err());
    }

    #[test]
    fn synthetic_names() {
        let s = load_system(&ModelSource::Named("synthetic:6:2:1:4".into())).unwrap();
        assert_eq!((s.order(), s.inputs(), s.outputs()), (6, 2, 1));
        assert!(load_system(&ModelSource::Named("synthetic:0".into())).is_err());
        assert!(load_system(&ModelSource::Named("no-such-model".into())).is_err());
    }
}
