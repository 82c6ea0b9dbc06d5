//! `young`: build, verify, evaluate and tabulate Young function artifacts.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error,
//! 3 construction failure.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use young_core::numfmt::format_f64;
use young_core::verify::{run_suite, Check, Status, VerificationReport};
use young_core::{construct, Error, MeasureFamily, YoungFunction};

use config::Config;

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn from_core(e: Error) -> Self {
        let code = match e {
            Error::Construction(_) | Error::Quadrature { .. } => 3,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(name = "young", version, about = "Smooth moderate Young functions from measure tails")]
struct Cli {
    /// Worker threads for verification (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an artifact from a config.
    Build {
        #[arg(long)]
        config: PathBuf,
        /// Artifact path (default: outputs.artifact of the config, else stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite on a config build or a stored artifact.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        artifact: Option<PathBuf>,
        /// Report path (default: outputs.report of the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print x, U, U', U'' for the given arguments.
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        artifact: Option<PathBuf>,
        #[arg(required = true, allow_negative_numbers = true)]
        xs: Vec<String>,
    },
    /// Write x, U, U', U'' over a log-spaced range as CSV.
    Tabulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        artifact: Option<PathBuf>,
        /// `a:b:n`, n log-spaced points in [a, b].
        #[arg(long)]
        range: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_artifact(path: &Path) -> Result<YoungFunction, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    YoungFunction::from_json(&text).map_err(CliError::from_core)
}

fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn build_from(cfg: &Config) -> Result<(MeasureFamily, YoungFunction), CliError> {
    let family = cfg.family()?;
    let young = construct(&family, cfg.theta, cfg.horizon, cfg.epsilon).map_err(|e| {
        let mut err = CliError::from_core(e);
        if err.code == 2 {
            // the inputs were validated already; anything failing now is the construction
            err.code = 3;
        }
        err
    })?;
    Ok((family, young))
}

/// Loads the function either from an artifact or by building from a config.
fn load_function(config: Option<&Path>, artifact: Option<&Path>) -> Result<YoungFunction, CliError> {
    match (artifact, config) {
        (Some(a), _) => read_artifact(a),
        (None, Some(c)) => Ok(build_from(&Config::load(c)?)?.1),
        (None, None) => Err(CliError::input("either --artifact or --config is required")),
    }
}

fn cmd_build(config: &Path, out: Option<&Path>) -> Result<u8, CliError> {
    let cfg = Config::load(config)?;
    let (_, young) = build_from(&cfg)?;
    let text = young.to_json();
    match out.map(Path::to_path_buf).or_else(|| cfg.outputs.artifact.as_ref().map(|p| cfg.resolve(p))) {
        Some(path) => {
            write_output(&path, &text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(0)
}

fn integrity_failure(e: &Error) -> VerificationReport {
    let check = Check {
        name: "table_consistency".into(),
        anchor: "artifact-integrity".into(),
        status: Status::Fail,
        constant: None,
        threshold: None,
        witness: Vec::new(),
        detail: e.to_string(),
    };
    VerificationReport { checks: vec![check] }
}

fn cmd_verify(config: Option<&Path>, artifact: Option<&Path>, out: Option<&Path>) -> Result<u8, CliError> {
    let cfg = config.map(Config::load).transpose()?;
    let opts = cfg.as_ref().map(Config::suite_options).unwrap_or_default();
    let report_path = out.map(Path::to_path_buf).or_else(|| {
        cfg.as_ref().and_then(|c| c.outputs.report.as_ref().map(|p| c.resolve(p)))
    });

    let (family, young) = match (artifact, &cfg) {
        (Some(a), _) => {
            let text = std::fs::read_to_string(a).map_err(|e| CliError::input(format!("cannot read {}: {e}", a.display())))?;
            let family = cfg.as_ref().map(Config::family).transpose()?;
            match YoungFunction::from_json(&text) {
                Ok(y) => (family, y),
                Err(e @ Error::CorruptedTable(_)) => {
                    let report = integrity_failure(&e);
                    emit_report(&report, report_path.as_deref())?;
                    return Ok(1);
                }
                Err(e) => return Err(CliError::from_core(e)),
            }
        }
        (None, Some(c)) => {
            let (f, y) = build_from(c)?;
            (Some(f), y)
        }
        (None, None) => return Err(CliError::input("either --artifact or --config is required")),
    };
    let report = run_suite(family.as_ref(), &young, &opts);
    emit_report(&report, report_path.as_deref())?;
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn emit_report(report: &VerificationReport, path: Option<&Path>) -> Result<(), CliError> {
    print!("{}", report.to_table());
    if let Some(p) = path {
        write_output(p, &report.to_json())?;
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn rows(young: &YoungFunction, xs: &[f64]) -> Result<String, CliError> {
    let mut out = String::from("x,U,U1,U2\n");
    for &x in xs {
        let (u, u1, u2) = (
            young.eval(x).map_err(CliError::from_core)?,
            young.d1(x).map_err(CliError::from_core)?,
            young.d2(x).map_err(CliError::from_core)?,
        );
        writeln!(out, "{},{},{},{}", format_f64(x), format_f64(u), format_f64(u1), format_f64(u2)).unwrap();
    }
    Ok(out)
}

fn parse_number(s: &str) -> Result<f64, CliError> {
    young_core::numfmt::parse_f64(s).filter(|v| v.is_finite()).ok_or_else(|| CliError::input(format!("not a number: '{s}'")))
}

fn cmd_eval(config: Option<&Path>, artifact: Option<&Path>, xs: &[String]) -> Result<u8, CliError> {
    let xs: Vec<f64> = xs.iter().map(|s| parse_number(s)).collect::<Result<_, _>>()?;
    let young = load_function(config, artifact)?;
    print!("{}", rows(&young, &xs)?);
    Ok(0)
}

/// `a:b:n` with `0 < a <= b` and `n >= 1`.
pub fn parse_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(CliError::input(format!("range must be a:b:n, got '{spec}'")));
    };
    let (a, b) = (parse_number(a)?, parse_number(b)?);
    let n: usize = n.trim().parse().map_err(|_| CliError::input(format!("bad point count '{n}'")))?;
    if !(a > 0.0 && b >= a && n >= 1) || (n == 1 && a != b) {
        return Err(CliError::input(format!("need 0 < a <= b and n >= 1 (n >= 2 unless a = b), got '{spec}'")));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let (la, lb) = (a.ln(), b.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => a,
            i if i == n - 1 => b,
            i => (la + (lb - la) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

fn cmd_tabulate(config: Option<&Path>, artifact: Option<&Path>, range: &str, out: Option<&Path>) -> Result<u8, CliError> {
    let xs = parse_range(range)?;
    let young = load_function(config, artifact)?;
    let csv = rows(&young, &xs)?;
    match out {
        Some(p) => write_output(p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::input("--jobs must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::input(format!("cannot size the worker pool: {e}")))?;
    }
    match &cli.command {
        Command::Build { config, out } => cmd_build(config, out.as_deref()),
        Command::Verify { config, artifact, out } => cmd_verify(config.as_deref(), artifact.as_deref(), out.as_deref()),
        Command::Eval { config, artifact, xs } => cmd_eval(config.as_deref(), artifact.as_deref(), xs),
        Command::Tabulate { config, artifact, range, out } => {
            cmd_tabulate(config.as_deref(), artifact.as_deref(), range, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
