//! The `robustmap` command line: config parsing, persistent formats and the
//! sweep / analyze / render pipeline.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 validation failure
//! (plans disagreeing, malformed cost files, unrenderable surfaces), 3 I/O
//! failure.

mod config;
mod surface_csv;

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use config::{parse_config, ConfigError, OutputNames, RunConfig};
pub use surface_csv::{read_surface_csv, write_surface_csv, CsvError, HEADER};

use crate::analyze::{build_report, AnalyzeError, Tolerance};
use crate::exec::PlanId;
use crate::render::{render_surface, MapError, MapMode};
use crate::storage::build_dataset;
use crate::sweep::{run_sweep, validate_surface, CostSurface, Mismatch, MismatchKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Config {
        path: PathBuf,
        source: ConfigError,
    },
    #[error("plans disagree on results:\n{}", list_mismatches(.0))]
    Mismatches(Vec<Mismatch>),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: CsvError },
    #[error(transparent)]
    Analyze(AnalyzeError),
    #[error(transparent)]
    Map(MapError),
    #[error("sweep failed: {0}")]
    Sweep(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Mismatches(_)
            | CliError::Csv { .. }
            | CliError::Analyze(_)
            | CliError::Map(_)
            | CliError::Sweep(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl From<AnalyzeError> for CliError {
    fn from(err: AnalyzeError) -> Self {
        match err {
            AnalyzeError::Validation(m) => CliError::Mismatches(m),
            other => CliError::Analyze(other),
        }
    }
}

impl From<MapError> for CliError {
    fn from(err: MapError) -> Self {
        match err {
            MapError::Dims { .. } | MapError::PlanRequired(_) | MapError::UnknownPlan(_) => {
                CliError::Usage(err.to_string())
            }
            other => CliError::Map(other),
        }
    }
}

fn list_mismatches(list: &[Mismatch]) -> String {
    list.iter()
        .map(|m| {
            let what = match m.kind {
                MismatchKind::Count => "row count",
                MismatchKind::Checksum => "rowid checksum",
            };
            let point = match m.point.axis2 {
                Some(e2) => format!("({}, {})", m.point.axis1, e2),
                None => format!("({})", m.point.axis1),
            };
            format!("  {point}: {} vs {}: {what}", m.plans.0, m.plans.1)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    parse_config(&read(path)?).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_surface(path: &Path) -> Result<CostSurface, CliError> {
    read_surface_csv(&read(path)?).map_err(|source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

/// Builds the dataset, sweeps the grid and rejects surfaces whose plans
/// disagree on any result.
pub fn sweep_validated(config: &RunConfig) -> Result<CostSurface, CliError> {
    let dataset = build_dataset(config.dataset.clone()).map_err(|e| CliError::Sweep(e.to_string()))?;
    let surface = run_sweep(&dataset, &config.grid, &config.exec)
        .map_err(|e| CliError::Sweep(e.to_string()))?;
    if surface.plans.len() >= 2 {
        let mismatches = validate_surface(&surface).map_err(|e| CliError::Sweep(e.to_string()))?;
        if !mismatches.is_empty() {
            return Err(CliError::Mismatches(mismatches));
        }
    }
    Ok(surface)
}

/// The report as pretty JSON with keys in lexicographic order.
pub fn report_json(
    surface: &CostSurface,
    tolerance: Tolerance,
    jump_factor: f64,
) -> Result<String, CliError> {
    let report = build_report(surface, tolerance, jump_factor)?;
    // Map values are BTreeMaps, so keys come out sorted.
    let value = serde_json::to_value(&report).expect("report serializes");
    let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
    text.push('\n');
    Ok(text)
}

pub fn cmd_sweep(config: &Path, out: &Path) -> Result<(), CliError> {
    let config = load_config(config)?;
    let surface = sweep_validated(&config)?;
    write(out, &write_surface_csv(&surface))
}

pub fn cmd_analyze(costs: &Path, config: &Path, out: &Path) -> Result<(), CliError> {
    let config = load_config(config)?;
    let surface = load_surface(costs)?;
    write(out, &report_json(&surface, config.tolerance, config.jump_factor)?)
}

pub fn cmd_render(
    costs: &Path,
    mode: MapMode,
    plan: Option<&str>,
    config: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let plan = plan
        .map(|name| name.parse::<PlanId>().map_err(|e| CliError::Usage(e.to_string())))
        .transpose()?;
    let tolerance = match config {
        Some(path) => load_config(path)?.tolerance,
        None => Tolerance::default(),
    };
    let surface = load_surface(costs)?;
    write(out, &render_surface(&surface, mode, plan, tolerance)?)
}

/// Runs the whole pipeline into `outdir`: the cost CSV, the report, and the
/// maps that fit the surface. A 1-D surface gets `curve.svg`; a 2-D surface
/// gets `optimality.svg` plus `absolute-<plan>.svg` and
/// `relative-<plan>.svg` for every plan. Returns the written paths.
pub fn cmd_all(config_path: &Path, outdir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let config = load_config(config_path)?;
    let surface = sweep_validated(&config)?;
    fs::create_dir_all(outdir).map_err(|source| CliError::Io {
        path: outdir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    let mut emit = |name: &str, text: &str| -> Result<(), CliError> {
        let path = outdir.join(name);
        write(&path, text)?;
        written.push(path);
        Ok(())
    };

    let csv_text = write_surface_csv(&surface);
    emit(&config.outputs.costs, &csv_text)?;
    // Analyze what was persisted, as the separate commands would.
    let surface = read_surface_csv(&csv_text).map_err(|source| CliError::Csv {
        path: outdir.join(&config.outputs.costs),
        source,
    })?;
    emit(
        &config.outputs.report,
        &report_json(&surface, config.tolerance, config.jump_factor)?,
    )?;

    let tol = config.tolerance;
    if surface.dims == 1 {
        emit("curve.svg", &render_surface(&surface, MapMode::Curve, None, tol)?)?;
    } else {
        emit(
            "optimality.svg",
            &render_surface(&surface, MapMode::Optimality, None, tol)?,
        )?;
        for &plan in &surface.plans {
            for mode in [MapMode::Absolute, MapMode::Relative] {
                let svg = render_surface(&surface, mode, Some(plan), tol)?;
                emit(&format!("{}-{plan}.svg", mode.name()), &svg)?;
            }
        }
    }
    Ok(written)
}

#[derive(Debug, Parser)]
#[command(name = "robustmap", version, about = "Robustness maps for query execution plans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Curve,
    Absolute,
    Relative,
    Optimality,
}

impl From<ModeArg> for MapMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Curve => MapMode::Curve,
            ModeArg::Absolute => MapMode::Absolute,
            ModeArg::Relative => MapMode::Relative,
            ModeArg::Optimality => MapMode::Optimality,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Measure every plan at every grid point and write the costs as CSV.
    Sweep {
        /// JSON run config; `{}` selects all defaults.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive the robustness report (JSON) from a cost CSV.
    ///
    /// The optimality tolerance and jump factor come from the config and
    /// default to 1% relative and 3.
    Analyze {
        #[arg(long)]
        costs: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw one SVG map from a cost CSV.
    ///
    /// `curve` needs a 1-D surface; the other modes need a 2-D surface, and
    /// `absolute` and `relative` also need --plan. The optimality tolerance
    /// comes from --config and defaults to 1% relative.
    Render {
        #[arg(long)]
        costs: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        plan: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep, analyze and render every map into a directory.
    All {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        outdir: PathBuf,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Sweep { config, out } => cmd_sweep(&config, &out),
        Command::Analyze { costs, config, out } => cmd_analyze(&costs, &config, &out),
        Command::Render {
            costs,
            mode,
            plan,
            config,
            out,
        } => cmd_render(&costs, mode.into(), plan.as_deref(), config.as_deref(), &out),
        Command::All { config, outdir } => cmd_all(&config, &outdir).map(|_| ()),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("robustmap: {err}");
            err.exit_code()
        }
    }
}
