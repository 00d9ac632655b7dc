//! `goat` command line: optimizations, studies and gradient checks.
//!
//! Every run writes into a fresh timestamped directory under the output
//! directory, which is taken from `--output-dir`, then the config's
//! `output_dir`, then `$GOAT_OUTPUT_DIR`, then `./goat-runs`.

mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use goat_core::config::ProblemConfig;
use goat_core::gradcheck::{gradient_check, GradientReport, FD_STEP, MAX_RELATIVE_ERROR};
use goat_core::optimize::{multistart, optimize, OptimizationProblem, OptimizationTrace, Status};
use goat_core::studies::{
    run_dim_study, run_goat_vs_nm, run_high_accuracy_cnot, run_pwc_study, DimStudySpec, GoatVsNmSpec,
    HighAccuracySpec, PwcStudySpec, StudyOutput,
};
use goat_core::GoatError;

pub use output::{write_atomic, RunDir};

pub const ENV_OUTPUT_DIR: &str = "GOAT_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "goat-runs";

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// I/O failure while writing artifacts.
    pub const IO: i32 = 1;
    /// Bad command line, config or spec.
    pub const USAGE: i32 = 2;
    /// Numerical failure, failed gradient check, or a non-converged stop
    /// other than a cap.
    pub const NUMERICAL: i32 = 3;
    /// Iteration or time cap reached before the threshold.
    pub const CAP: i32 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "goat", version, about = "Optimal control with analytic pulses and exact gradients")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Seed for random starts and random problems.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Parent directory of run directories.
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Iteration cap per optimizer run
    #[arg(long, global = true, value_name = "N")]
    pub max_iterations: Option<usize>,
    /// Goal value at which an optimization counts as converged.
    #[arg(long, global = true, value_name = "G")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize the problem described by a config file.
    Optimize { config: PathBuf },
    /// Run a study, optionally from a spec file.
    Study {
        name: StudyName,
        /// TOML study spec; defaults are used when omitted
        spec: Option<PathBuf>,
    },
    /// Compare propagated gradients with central finite differences.
    Gradcheck {
        config: PathBuf,
        /// Finite-difference step
        #[arg(long, default_value_t = FD_STEP)]
        step: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyName {
    Pwc,
    Dims,
    GoatVsNm,
    CnotHi,
}

impl StudyName {
    fn as_str(self) -> &'static str {
        match self {
            StudyName::Pwc => "pwc",
            StudyName::Dims => "dims",
            StudyName::GoatVsNm => "goat-vs-nm",
            StudyName::CnotHi => "cnot-hi",
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            code
        }
    }
}

pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Optimize { config } => cmd_optimize(config, &cli.overrides),
        Command::Study { name, spec } => cmd_study(*name, spec.as_deref(), &cli.overrides),
        Command::Gradcheck { config, step } => cmd_gradcheck(config, *step, &cli.overrides),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}

pub fn error_code(e: &GoatError) -> i32 {
    match e {
        GoatError::Io(_) => exit::IO,
        GoatError::Config { .. }
        | GoatError::InvalidArgument(_)
        | GoatError::DimensionMismatch { .. }
        | GoatError::IndexOutOfRange { .. } => exit::USAGE,
        _ => exit::NUMERICAL,
    }
}

pub fn status_code(status: Status) -> i32 {
    match status {
        Status::Converged => exit::OK,
        s if s.is_cap() => exit::CAP,
        _ => exit::NUMERICAL,
    }
}

fn output_base(flag: Option<&Path>, config: Option<&str>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = config {
        return PathBuf::from(p);
    }
    match std::env::var_os(ENV_OUTPUT_DIR) {
        Some(p) if !p.is_empty() => PathBuf::from(p),
        _ => PathBuf::from(DEFAULT_OUTPUT_DIR),
    }
}

fn io_err(e: std::io::Error) -> GoatError {
    GoatError::Io(e.to_string())
}

fn write_json(dir: &mut RunDir, name: &str, value: &Value) -> goat_core::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| GoatError::Io(e.to_string()))?;
    text.push('\n');
    dir.write(name, text.as_bytes()).map_err(io_err)
}

/// Writes `manifest.json`; always the last file of a run.
fn write_manifest(
    mut dir: RunDir,
    command: &str,
    config: Value,
    seeds: Value,
    status: &str,
    code: i32,
    summary: Value,
) -> goat_core::Result<PathBuf> {
    let manifest = json!({
        "tool": "goat",
        "version": goat_core::VERSION,
        "command": command,
        "config": config,
        "seeds": seeds,
        "started_at": dir.started().to_rfc3339(),
        "finished_at": chrono::Utc::now().to_rfc3339(),
        "status": status,
        "exit_code": code,
        "files": dir.files(),
        "summary": summary,
    });
    write_json(&mut dir, "manifest.json", &manifest)?;
    println!("{}", dir.path().display());
    Ok(dir.path().to_path_buf())
}

fn load_config(path: &Path, overrides: &Overrides) -> goat_core::Result<ProblemConfig> {
    let mut config = ProblemConfig::from_path(path)?;
    if let Some(seed) = overrides.seed {
        config.optimizer.seed = seed;
    }
    if let Some(n) = overrides.max_iterations {
        config.optimizer.max_iterations = n;
    }
    if let Some(g) = overrides.threshold {
        config.optimizer.threshold = g;
    }
    Ok(config)
}

fn cmd_optimize(path: &Path, overrides: &Overrides) -> goat_core::Result<i32> {
    let config = load_config(path, overrides)?;
    let resolved = config.resolve()?;
    let problem = resolved.problem()?;
    let mut dir = RunDir::create(&output_base(overrides.output_dir.as_deref(), config.output_dir.as_deref()), "optimize")
        .map_err(io_err)?;
    let config_text = config.to_toml_string()?;
    dir.write("config.toml", config_text.as_bytes()).map_err(io_err)?;

    let outcome = if config.optimizer.starts > 1 {
        multistart(&problem, &config.optimizer.multistart_options()).map(|ms| {
            let mut starts = String::from("start,status,final_g,iterations\n");
            for s in &ms.summaries {
                starts.push_str(&format!(
                    "{},{},{},{}\n",
                    s.index,
                    s.status.map_or("error", |st| st.as_str()),
                    goat_core::optimize::format_float(s.final_value),
                    s.iterations
                ));
            }
            (ms.best, Some((ms.best_index, starts)))
        })
    } else {
        optimize(&problem).map(|t| (t, None))
    };
    let seeds = json!({ "optimizer": config.optimizer.seed });
    let config_echo = Value::String(config_text);
    let (trace, starts) = match outcome {
        Ok(v) => v,
        Err(e) => {
            let code = error_code(&e);
            eprintln!("error: {e}");
            write_manifest(dir, "optimize", config_echo, seeds, "error", code, json!({ "error": e.to_string() }))?;
            return Ok(code);
        }
    };
    write_trace(&mut dir, "trace.csv", &trace)?;
    let best_start = starts.as_ref().map(|(i, _)| *i);
    if let Some((_, table)) = &starts {
        dir.write("starts.csv", table.as_bytes()).map_err(io_err)?;
    }
    write_json(
        &mut dir,
        "params.json",
        &json!({
            "status": trace.status.as_str(),
            "final_g": trace.final_value(),
            "params": trace.final_params(),
        }),
    )?;
    let code = status_code(trace.status);
    let mut summary = trace.summary_json();
    summary["threshold"] = json!(problem.stop.threshold);
    if let Some(i) = best_start {
        summary["best_start"] = json!(i);
    }
    write_manifest(dir, "optimize", config_echo, seeds, trace.status.as_str(), code, summary)?;
    Ok(code)
}

fn write_trace(dir: &mut RunDir, name: &str, trace: &OptimizationTrace) -> goat_core::Result<()> {
    dir.write(name, trace.to_csv_string().as_bytes()).map_err(io_err)
}

fn load_spec<T: DeserializeOwned + Default>(path: Option<&Path>) -> goat_core::Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| GoatError::Io(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| GoatError::Config {
                path: p.display().to_string(),
                message: e.to_string().trim_end().to_string(),
            })
        }
    }
}

fn spec_echo<T: Serialize>(spec: &T) -> goat_core::Result<String> {
    toml::to_string(spec).map_err(|e| GoatError::Io(e.to_string()))
}

fn cmd_study(name: StudyName, spec_path: Option<&Path>, overrides: &Overrides) -> goat_core::Result<i32> {
    let base = output_base(overrides.output_dir.as_deref(), None);
    let (output, echo, seeds): (StudyOutput, String, Value) = match name {
        StudyName::Pwc => {
            let mut spec: PwcStudySpec = load_spec(spec_path)?;
            if let Some(s) = overrides.seed {
                spec.seed = s;
            }
            let result = run_pwc_study(&spec)?;
            (result.output(&spec), spec_echo(&spec)?, json!({ "problem": spec.seed }))
        }
        StudyName::Dims => {
            let mut spec: DimStudySpec = load_spec(spec_path)?;
            if let Some(s) = overrides.seed {
                spec.seed = s;
            }
            if let Some(n) = overrides.max_iterations {
                spec.max_iterations = n;
            }
            if let Some(g) = overrides.threshold {
                spec.threshold = g;
            }
            let result = run_dim_study(&spec)?;
            (result.output(&spec), spec_echo(&spec)?, json!({ "study": spec.seed }))
        }
        StudyName::GoatVsNm => {
            let mut spec: GoatVsNmSpec = load_spec(spec_path)?;
            if let Some(s) = overrides.seed {
                spec.benchmark.seed = s;
            }
            if let Some(n) = overrides.max_iterations {
                spec.goat_max_iterations = n;
            }
            if let Some(g) = overrides.threshold {
                spec.threshold = g;
            }
            let result = run_goat_vs_nm(&spec)?;
            (result.output(&spec), spec_echo(&spec)?, json!({ "start": spec.benchmark.seed }))
        }
        StudyName::CnotHi => {
            let mut spec: HighAccuracySpec = load_spec(spec_path)?;
            if let Some(s) = overrides.seed {
                spec.benchmark.seed = s;
            }
            if let Some(n) = overrides.max_iterations {
                spec.max_iterations = n;
            }
            if let Some(g) = overrides.threshold {
                spec.threshold = g;
            }
            let result = run_high_accuracy_cnot(&spec)?;
            (result.output(&spec), spec_echo(&spec)?, json!({ "multistart": spec.benchmark.seed }))
        }
    };
    let mut dir = RunDir::create(&base, &format!("study-{}", name.as_str())).map_err(io_err)?;
    dir.write("spec.toml", echo.as_bytes()).map_err(io_err)?;
    dir.write(&format!("{}.csv", output.name), output.table.to_csv_string().as_bytes())
        .map_err(io_err)?;
    for (label, table) in &output.tables {
        dir.write(&format!("{label}.csv"), table.to_csv_string().as_bytes()).map_err(io_err)?;
    }
    for (label, trace) in &output.traces {
        write_trace(&mut dir, &format!("trace_{label}.csv"), trace)?;
    }
    write_manifest(
        dir,
        &format!("study {}", name.as_str()),
        Value::String(echo),
        seeds,
        "completed",
        exit::OK,
        output.summary,
    )?;
    Ok(exit::OK)
}

/// Runs the check and returns the exit code with the report; numerical
/// errors map to their exit code.
pub fn run_gradcheck(problem: &OptimizationProblem, params: &[f64], step: f64) -> (i32, Result<GradientReport, GoatError>) {
    match gradient_check(problem, params, step) {
        Ok(report) => {
            let code = if report.passes(MAX_RELATIVE_ERROR) { exit::OK } else { exit::NUMERICAL };
            (code, Ok(report))
        }
        Err(e) => (error_code(&e), Err(e)),
    }
}

fn cmd_gradcheck(path: &Path, step: f64, overrides: &Overrides) -> goat_core::Result<i32> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(GoatError::InvalidArgument("--step must be positive".into()));
    }
    let config = load_config(path, overrides)?;
    let resolved = config.resolve()?;
    let problem = resolved.problem()?;
    let mut dir = RunDir::create(&output_base(overrides.output_dir.as_deref(), config.output_dir.as_deref()), "gradcheck")
        .map_err(io_err)?;
    let config_text = config.to_toml_string()?;
    dir.write("config.toml", config_text.as_bytes()).map_err(io_err)?;
    let seeds = json!({ "optimizer": config.optimizer.seed });
    let (code, report) = run_gradcheck(&problem, &resolved.initial, step);
    let (status, summary) = match report {
        Ok(report) => {
            dir.write("gradcheck.csv", report.table().to_csv_string().as_bytes())
                .map_err(io_err)?;
            let summary = json!({
                "step": step,
                "slots": report.slots.len(),
                "max_relative_error": report.max_relative_error(),
                "median_relative_error": report.median_relative_error(),
                "bound": MAX_RELATIVE_ERROR,
            });
            println!(
                "{} slots, max relative error {:e}",
                report.slots.len(),
                report.max_relative_error()
            );
            (if code == exit::OK { "passed" } else { "failed" }, summary)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ("error", json!({ "error": e.to_string() }))
        }
    };
    write_manifest(dir, "gradcheck", Value::String(config_text), seeds, status, code, summary)?;
    Ok(code)
}
