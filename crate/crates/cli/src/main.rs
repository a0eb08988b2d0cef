//! `tripod`: config-driven runs of the linear-response spectra, the
//! Maxwell–Bloch integrator, the magnetometer estimate and the quantum
//! cross-phase study.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod mb;
mod quantum;
mod sink;
mod study;

use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use tripod_core::config::{Resolved, RunFile};

use crate::sink::{Format, Sink};

#[derive(Parser)]
#[command(name = "tripod", version, about = "Weak-probe propagation through a driven tripod-atom medium")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Absorption and dispersion of both circular probe components.
    Spectra(Common),
    /// Maxwell–Bloch pulse propagation with a comparison against linear response.
    Mb(Common),
    /// Minimum detectable field, optionally swept along one parameter.
    Magnetometer(Common),
    /// Coherent-state revivals and two-photon CPHASE fidelity maps.
    Quantum(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectra(_) => "spectra",
            Command::Mb(_) => "mb",
            Command::Magnetometer(_) => "magnetometer",
            Command::Quantum(_) => "quantum",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Spectra(c) | Command::Mb(c) | Command::Magnetometer(c) | Command::Quantum(c) => c,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON run file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Format of tabular outputs; reports are always JSON.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Exit with status 4 when a regime check fails.
    #[arg(long)]
    strict: bool,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Overrides the seed given in the run file.
    #[arg(long)]
    seed: Option<u64>,
    /// Print progress and file names to stderr.
    #[arg(short, long, action = ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
}

impl Failure {
    pub fn output(path: &Path, source: io::Error) -> Self {
        Failure::Output { path: path.to_path_buf(), source }
    }

    pub fn config(path: &str, reason: impl Into<String>) -> Self {
        Failure::Config(format!("config error at `{path}`: {}", reason.into()))
    }

    /// A core validation error on a value taken from `section`.
    pub fn in_section(section: &str, e: tripod_core::Error) -> Self {
        match e {
            tripod_core::Error::Validation { field, reason } => Failure::config(&format!("{section}.{field}"), reason),
            other => other.into(),
        }
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Output { .. } => 1,
        }
    }
}

impl From<tripod_core::Error> for Failure {
    fn from(e: tripod_core::Error) -> Self {
        use tripod_core::Error as E;
        match e {
            E::Validation { .. } | E::Config { .. } | E::UnknownAxis(_) | E::Json(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

/// Shared inputs of every subcommand.
pub struct Ctx {
    pub file: RunFile,
    pub resolved: Resolved,
    pub verbose: u8,
}

/// What a command hands back: summary lines and failed regime checks.
#[derive(Default)]
pub struct Outcome {
    pub summary: Vec<String>,
    pub regime_failures: Vec<String>,
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let common = cli.command.common();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Numerical(e.to_string()))?;
    }
    let mut file = RunFile::load(&common.config)?;
    if let Some(seed) = common.seed {
        file.seed = seed;
    }
    let resolved = file.resolve()?;
    let provenance = vec![
        ("tool", format!("tripod {}", env!("CARGO_PKG_VERSION"))),
        ("command", cli.command.name().to_string()),
        ("seed", file.seed.to_string()),
        ("resolved", compact(&resolved)),
        ("run_file", compact(&file)),
    ];
    let mut sink = Sink::new(&common.out, common.format, provenance)?;
    sink.report("params", &serde_json::json!({ "run_file": file, "resolved": resolved }))?;
    let ctx = Ctx { file, resolved, verbose: common.verbose };
    let outcome = match &cli.command {
        Command::Spectra(_) => study::spectra(&ctx, &mut sink)?,
        Command::Mb(_) => mb::run(&ctx, &mut sink)?,
        Command::Magnetometer(_) => study::magnetometer(&ctx, &mut sink)?,
        Command::Quantum(_) => quantum::run(&ctx, &mut sink)?,
    };
    if common.verbose > 0 {
        for p in sink.written() {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(outcome)
}

/// Single-line JSON for the provenance block.
fn compact<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_default()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let strict = cli.command.common().strict;
    match run(&cli) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.regime_failures {
                eprintln!("regime check failed: {f}");
            }
            if strict && !outcome.regime_failures.is_empty() {
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
