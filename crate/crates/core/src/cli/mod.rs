//! Command-line front end: `synth`, `fit`, `sweep`, `probe` and `netinfo`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or model
//! error, 3 sieve net over budget, 130 interrupted.

mod commands;
mod config;

pub use commands::{cmd_fit, cmd_netinfo, cmd_probe, cmd_sweep, cmd_synth, Context};
pub use config::RunConfig;

use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::data::DataError;
use crate::harness::HarnessError;
use crate::lp::LpError;
use crate::sieve::SieveError;
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Budget(String),
    #[error("interrupted")]
    Interrupted,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Interrupted => 130,
        }
    }
}

impl From<SieveError> for CliError {
    fn from(e: SieveError) -> Self {
        match e {
            SieveError::NetBudgetExceeded { .. } => CliError::Budget(e.to_string()),
            SieveError::InvalidSpec(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Sieve {
                source: SieveError::NetBudgetExceeded { .. },
                ..
            } => CliError::Budget(e.to_string()),
            HarnessError::InvalidConfig(_) | HarnessError::TooManyVertices(_) => {
                CliError::Usage(e.to_string())
            }
            HarnessError::Synth { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Usage(format!("oracle: {e}"))
    }
}

impl From<LpError> for CliError {
    fn from(e: LpError) -> Self {
        CliError::Data(format!("estimator: {e}"))
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

/// Routes Ctrl-C to a flag that long-running commands poll between steps.
pub fn install_interrupt_handler() {
    let _ = ctrlc::set_handler(|| INTERRUPTED.store(true, Ordering::SeqCst));
}

pub(crate) fn interrupted() -> bool {
    INTERRUPTED.load(Ordering::SeqCst)
}

#[derive(Debug, Parser)]
#[command(
    name = "plugin-rates",
    version,
    about = "Plug-in and sieve classifiers on synthetic laws with known regression function"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a labelled sample from a synthetic law.
    Synth(Common),
    /// Train a classifier on a CSV sample and evaluate it on a grid.
    Fit(Common),
    /// Excess risk against n, with a log-log slope fit.
    Sweep(Common),
    /// Concentration, exponential-decay or lower-bound probe.
    Probe(Common),
    /// Size of a sieve net.
    Netinfo(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Base seed; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    for pair in &common.set {
        cfg.apply_override(pair)?;
    }
    if let Some(seed) = common.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    Ok(cfg)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Messages go to stdout and errors to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, common) = match &cli.command {
        Command::Synth(c) => ("synth", c),
        Command::Fit(c) => ("fit", c),
        Command::Sweep(c) => ("sweep", c),
        Command::Probe(c) => ("probe", c),
        Command::Netinfo(c) => ("netinfo", c),
    };
    let result = load(common).and_then(|cfg| {
        let ctx = Context::new(name, cfg, common.out.clone());
        let report = match name {
            "synth" => cmd_synth(&ctx),
            "fit" => cmd_fit(&ctx),
            "sweep" => cmd_sweep(&ctx),
            "probe" => cmd_probe(&ctx),
            _ => cmd_netinfo(&ctx),
        }?;
        print!("{report}");
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
