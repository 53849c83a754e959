//! `fkgas`: batch experiments on the path-integral Bose gas.
//!
//! Exit codes: 0 ok, 1 I/O, 2 configuration, 3 budget, 4 structural or model
//! error, 5 a check failed.

mod commands;
mod config;
mod output;

use clap::{Parser, ValueEnum};
use config::ExperimentConfig;
use fkgas::ErrorKind;
use output::ErrorRecord;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Draw configurations and their statistics.
    Sample,
    /// Partition function and observables by enumeration.
    Oracle,
    /// Three-way comparison of the bridge, loop and marked-point models.
    Equivalence,
    /// Conditional resampling consistency.
    Dlr,
    /// Time-shift and time-reversal invariance.
    Invariance,
    /// Relative entropy against its bound.
    Entropy,
    /// Wiener sausage diagnostics.
    Sausage,
    /// The full acceptance suite.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Oracle => "oracle",
            Command::Equivalence => "equivalence",
            Command::Dlr => "dlr",
            Command::Invariance => "invariance",
            Command::Entropy => "entropy",
            Command::Sausage => "sausage",
            Command::Verify => "verify",
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "fkgas", version, about = "Batch experiments on the path-integral Bose gas")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "FKGAS_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "FKGAS_REPLICAS")]
    replicas: Option<usize>,
    #[arg(long, default_value = "fkgas-out")]
    out: PathBuf,
}

pub enum Failure {
    Lib(fkgas::Error),
    Io(std::io::Error),
    Checks(usize),
}

impl From<fkgas::Error> for Failure {
    fn from(e: fkgas::Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| fkgas::Error::Config(format!("cannot read {}: {e}", p.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.replicas {
        cfg.replicas = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = load(&cli).and_then(|cfg| commands::run(cli.command, &cfg, &cli.out));
    let (tag, code, message) = match outcome {
        Ok(()) => return ExitCode::SUCCESS,
        Err(Failure::Checks(n)) => ("check_failed", 5, format!("{n} check(s) failed")),
        Err(Failure::Io(e)) => ("io", 1, e.to_string()),
        Err(Failure::Lib(e)) => {
            let code = match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Budget => 3,
                ErrorKind::Structural => 4,
            };
            (e.tag(), code, e.to_string())
        }
    };
    let rec = ErrorRecord { error: tag, exit_code: code, message };
    let line = serde_json::to_string(&rec).unwrap_or_default();
    eprintln!("{line}");
    if cli.out.is_dir() {
        let _ = std::fs::write(cli.out.join("error.json"), format!("{line}\n"));
    }
    ExitCode::from(code as u8)
}
