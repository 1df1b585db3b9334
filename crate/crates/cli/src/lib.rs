//! `evsynth` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or format
//! error, 3 numeric divergence during training.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] evsynth_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use evsynth_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Config(_)) => 1,
            CliError::Core(E::Divergence { .. }) => 3,
            CliError::Core(_) => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "evsynth", version, about = "Synthesize event-camera streams from high-frame-rate video")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand. Flags override the config file.
#[derive(Debug, Clone, Args, Default)]
pub struct Common {
    /// Key-value config file (`section.key = value` per line).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Override any config key, e.g. `--set refsim.shot_rate=0`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a procedural scene to FSEQ (clean.fseq, plus noisy.fseq with --noisy).
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        noisy: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Reference sensor simulation of an FSEQ file.
    Simulate {
        input: PathBuf,
        /// `.csv` writes CSV, anything else EVT1.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train the network on generated scenes; writes model.evsn and history.csv.
    Train {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Convert an FSEQ file to events with a trained network.
    Infer {
        input: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare two event files; writes distance.csv, hist_a.csv and hist_b.csv.
    Eval {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Event-intensity histogram of an event file as CSV.
    Hist {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Gen { common, .. }
            | Command::Simulate { common, .. }
            | Command::Train { common, .. }
            | Command::Infer { common, .. }
            | Command::Eval { common, .. }
            | Command::Hist { common, .. } => common,
        }
    }
}

/// Config file first, then `--set`, then the dedicated flags.
pub fn resolve(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        cfg.merge_file(path)?;
    }
    for kv in &common.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v)?;
    }
    let flags = [
        ("run.seed", common.seed.map(|v| v.to_string())),
        ("run.workers", common.workers.map(|v| v.to_string())),
        ("refsim.theta", common.theta.map(|v| v.to_string())),
        ("loss.lambda", common.lambda.map(|v| v.to_string())),
        ("train.epochs", common.epochs.map(|v| v.to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli.command.common())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers()?)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cfg.workers().unwrap_or(0))))?;
    pool.install(|| commands::dispatch(&cli.command, &cfg))
}

/// Parse, run, report; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("evsynth: {e}");
            e.exit_code()
        }
    }
}
