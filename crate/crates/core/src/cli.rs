//! Command-line front end: argument parsing, orchestration and output routing.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::bvp::{Fidelity, FixedPointOperator};
use crate::config::{BuildError, ConfigError, RunConfig};
use crate::criteria::{assess, Zeta};
use crate::error::Error;
use crate::exec::configure_threads;
use crate::solver::{picard_solve, BoundaryResiduals, SolveResult};
use crate::stability::run_experiments;

pub const THREADS_ENV: &str = "HILFER_BVP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hilfer-bvp", version, about = "Sequential psi-Hilfer boundary value problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Criteria constants and theorem verdicts as JSON.
    Criteria(RunArgs),
    /// Picard solution; CSV of (t, u) plus a JSON summary.
    Solve(RunArgs),
    /// CSV of (r, zeta(r)).
    ZetaScan(RunArgs),
    /// Ulam-Hyers perturbation experiments as JSON.
    Stability(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON config; may be omitted when --scenario names a built-in scenario.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (a directory for sweeps).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Built-in scenario, or a scenario inside a multi-scenario config.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long, value_parser = ["paper-faithful", "corrected"])]
    pub mode: Option<String>,
}

/// Everything that ends a run with a nonzero status.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Problem(Error),
    NotConverged { iterations: usize, last_diff: f64 },
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::MissingMetadata(_) => CliError::Config(ConfigError::Field {
                field: "problem".into(),
                message: e.to_string(),
            }),
            e => CliError::Problem(e),
        }
    }
}

impl From<BuildError> for CliError {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::Config(c) => c.into(),
            BuildError::Problem(p) => p.into(),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NotConverged { .. } => 1,
            CliError::Problem(_) => 2,
            CliError::Config(_) => 3,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (kind, message) = match self {
            CliError::Config(e) => (e.kind(), e.to_string()),
            CliError::Problem(e) => (e.kind(), e.to_string()),
            CliError::NotConverged { iterations, last_diff } => (
                "NotConverged",
                format!("no convergence after {iterations} iterations (last difference {last_diff:e})"),
            ),
        };
        let mut err = json!({ "kind": kind, "message": message, "exit_code": self.exit_code() });
        match self {
            CliError::Config(ConfigError::Json { field, line, column, .. }) => {
                err["field"] = json!(field);
                err["line"] = json!(line);
                err["column"] = json!(column);
            }
            CliError::Config(ConfigError::Field { field, .. }) => err["field"] = json!(field),
            _ => {}
        }
        json!({ "error": err })
    }
}

/// Parse arguments, run, and write outputs. Returns the process exit code.
pub fn main_with(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    threads: Option<String>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let err = CliError::Config(ConfigError::Usage(e.to_string().trim_end().to_string()));
            report(&err, stderr);
            return err.exit_code();
        }
    };
    let result = apply_threads(threads).and_then(|_| run(&cli.command, stdout, stderr));
    match result {
        Ok(()) => 0,
        Err(e) => {
            report(&e, stderr);
            e.exit_code()
        }
    }
}

fn report(e: &CliError, stderr: &mut dyn Write) {
    let _ = writeln!(stderr, "{}", e.to_json());
}

fn apply_threads(threads: Option<String>) -> Result<(), CliError> {
    let Some(raw) = threads else { return Ok(()) };
    match raw.trim().parse::<usize>() {
        Ok(n) if n >= 1 => {
            configure_threads(n);
            Ok(())
        }
        _ => Err(ConfigError::Field {
            field: THREADS_ENV.into(),
            message: format!("expected a positive integer, got `{raw}`"),
        }
        .into()),
    }
}

fn load(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match (&args.config, &args.scenario) {
        (Some(path), scenario) => RunConfig::load(path, scenario.as_deref())?,
        (None, Some(name)) => RunConfig::builtin(name)?,
        (None, None) => {
            return Err(ConfigError::Usage("either --config or --scenario is required".into()).into())
        }
    };
    if let Some(n) = args.grid_n {
        cfg.grid.n = n;
    }
    if let Some(mode) = &args.mode {
        cfg.problem.mode = mode.parse::<Fidelity>()?;
    }
    Ok(cfg)
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
    .into()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn emit(out: &Option<PathBuf>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, bytes),
        None => stdout.write_all(bytes).map_err(|e| io_err(Path::new("<stdout>"), e)),
    }
}

fn pretty<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s.into_bytes()
}

/// 17 significant digits.
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv(header: [&str; 2], rows: impl Iterator<Item = (f64, f64)>) -> String {
    let mut s = format!("{},{}\n", header[0], header[1]);
    for (a, b) in rows {
        let _ = writeln!(s, "{},{}", fmt17(a), fmt17(b));
    }
    s
}

fn run(cmd: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Criteria(a) => cmd_criteria(a, stdout),
        Command::Solve(a) => cmd_solve(a, stdout, stderr),
        Command::ZetaScan(a) => cmd_zeta_scan(a, stdout, stderr),
        Command::Stability(a) => cmd_stability(a, stdout),
    }
}

fn cmd_criteria(args: &RunArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load(args)?;
    let (spec, notes) = cfg.build_spec()?;
    let mut report = assess(&spec, cfg.zeta.bounds()?)?;
    report.compare_with(&cfg.published);
    report.notes.splice(0..0, notes);
    emit(&args.out, &pretty(&report), stdout)
}

#[derive(Serialize)]
struct SolveSummary {
    #[serde(skip_serializing_if = "String::is_empty")]
    label: String,
    mode: Fidelity,
    grid_n: usize,
    converged: bool,
    iterations: usize,
    fixed_point_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    contraction_ratio: Option<f64>,
    bc_residuals: BoundaryResiduals,
    u_at_t_end: f64,
    sup_norm: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

fn solve_one(cfg: &RunConfig, label: String) -> Result<(SolveResult, SolveSummary), CliError> {
    let (spec, notes) = cfg.build_spec()?;
    let op = FixedPointOperator::new(&spec, cfg.grid.n, cfg.exec)?;
    let r = picard_solve(&op, &cfg.solve_options()?, None)?;
    let summary = SolveSummary {
        label,
        mode: spec.fidelity,
        grid_n: cfg.grid.n,
        converged: r.converged,
        iterations: r.iterations,
        fixed_point_residual: r.fixed_point_residual,
        contraction_ratio: r.contraction_ratio(),
        bc_residuals: r.bc_residuals,
        u_at_t_end: *r.u.values().last().unwrap_or(&0.0),
        sup_norm: r.u.sup_norm(),
        notes,
    };
    Ok((r, summary))
}

fn solution_csv(r: &SolveResult) -> String {
    let ts = r.u.grid().ts();
    csv(["t", "u"], ts.iter().copied().zip(r.u.values().iter().copied()))
}

fn not_converged(r: &SolveResult) -> CliError {
    CliError::NotConverged {
        iterations: r.iterations,
        last_diff: r.fixed_point_residual,
    }
}

fn cmd_solve(args: &RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load(args)?;
    if cfg.sweep.is_some() {
        let Some(dir) = &args.out else {
            return Err(ConfigError::Usage("a sweep writes one CSV per member; pass --out <dir>".into()).into());
        };
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut summaries = Vec::new();
        let mut failure = None;
        for v in cfg.variants()? {
            let (r, s) = solve_one(&v.config, v.label.clone())?;
            write_file(&dir.join(format!("{}.csv", v.label)), solution_csv(&r).as_bytes())?;
            if !r.converged && failure.is_none() {
                failure = Some(not_converged(&r));
            }
            summaries.push(s);
        }
        emit(&None, &pretty(&summaries), stdout)?;
        return failure.map_or(Ok(()), Err);
    }
    let (r, summary) = solve_one(&cfg, String::new())?;
    let body = solution_csv(&r);
    match &args.out {
        Some(p) => {
            write_file(p, body.as_bytes())?;
            emit(&None, &pretty(&summary), stdout)?;
        }
        None => {
            emit(&None, body.as_bytes(), stdout)?;
            let _ = stderr.write_all(&pretty(&summary));
        }
    }
    if r.converged {
        Ok(())
    } else {
        Err(not_converged(&r))
    }
}

fn cmd_zeta_scan(args: &RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load(args)?;
    let (spec, _) = cfg.build_spec()?;
    let report = crate::criteria::compute_constants(&spec)?;
    let zeta = Zeta::new(&spec, &report)?;
    let (lo, hi) = cfg.zeta.bounds()?;
    let body = csv(["r", "zeta"], zeta.scan(lo, hi, cfg.zeta.samples)?.into_iter());
    let summary = json!({
        "range": [lo, hi],
        "samples": cfg.zeta.samples + 1,
        "xi_const": report.xi_const,
        "negative_intervals": zeta.negative_intervals(lo, hi)?,
    });
    match &args.out {
        Some(p) => {
            write_file(p, body.as_bytes())?;
            emit(&None, &pretty(&summary), stdout)
        }
        None => {
            emit(&None, body.as_bytes(), stdout)?;
            let _ = stderr.write_all(&pretty(&summary));
            Ok(())
        }
    }
}

fn cmd_stability(args: &RunArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load(args)?;
    let (spec, _) = cfg.build_spec()?;
    let report = crate::criteria::compute_constants(&spec)?;
    let op = FixedPointOperator::new(&spec, cfg.grid.n, cfg.exec)?;
    let perts = cfg.stability.perturbations()?;
    let table = run_experiments(&op, &report, &perts, &cfg.solve_options()?)?;
    emit(&args.out, &pretty(&table), stdout)?;
    match table.experiments.iter().find(|e| !e.converged) {
        Some(e) => Err(CliError::NotConverged {
            iterations: e.iterations,
            last_diff: f64::NAN,
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("hilfer-bvp").chain(args.iter().copied());
        let code = main_with(argv, None, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn csv_uses_17_digits() {
        let s = csv(["t", "u"], [(0.1, 1.0 / 3.0)].into_iter());
        assert_eq!(s, "t,u\n1.0000000000000001e-1,3.3333333333333331e-1\n");
    }

    #[test]
    fn usage_errors_exit_3_with_json() {
        let (code, _, err) = run_args(&["solve"]);
        assert_eq!(code, 3);
        let v: serde_json::Value = serde_json::from_str(&err).unwrap();
        assert_eq!(v["error"]["kind"], "UsageError");
        let (code, _, _) = run_args(&["frobnicate"]);
        assert_eq!(code, 3);
        let (code, _, _) = run_args(&["solve", "--scenario", "example-4.1-i", "--mode", "bogus"]);
        assert_eq!(code, 3);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("zeta-scan"));
    }

    #[test]
    fn bad_thread_count_is_config_error() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with(
            ["hilfer-bvp", "criteria", "--scenario", "example-4.1-i"],
            Some("zero".into()),
            &mut out,
            &mut err,
        );
        assert_eq!(code, 3);
    }

    #[test]
    fn criteria_for_builtin() {
        let (code, out, _) = run_args(&["criteria", "--scenario", "example-4.1-i"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["delta"].as_f64().unwrap() + 1.94081).abs() < 1e-5);
        assert!(v["verdicts"]["banach"]["holds"].as_bool().unwrap());
        assert_eq!(v["published_comparison"].as_array().unwrap().len(), 7);
    }

    #[test]
    fn missing_growth_is_config_error() {
        let (code, _, err) = run_args(&["zeta-scan", "--scenario", "example-4.1-i"]);
        assert_eq!(code, 3, "{err}");
    }
}
