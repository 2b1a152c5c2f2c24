//! `ffsonar`: generate synthetic tank recordings, evaluate the three
//! descriptors with both classifiers, check the synthesis/estimation
//! roundtrip and dump traces for plotting.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "ffsonar", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Replaces every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; relative configuration paths resolve against it.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize the labeled dataset and its manifest.
    Generate,
    /// Cross-validate every descriptor with every classifier.
    Evaluate,
    /// Synthesize isolated echoes and estimate their form functions back.
    Roundtrip,
    /// Write CSV dumps of form functions, matched-filter traces and descriptors.
    Plot,
    /// Print the effective configuration.
    Config,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    NoDetection(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::NoDetection(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::NoDetection(m) => write!(f, "no echo detected: {m}"),
            CliError::Other(m) => f.write_str(m),
        }
    }
}

impl From<ffsonar::Error> for CliError {
    fn from(e: ffsonar::Error) -> Self {
        use ffsonar::Error as E;
        match e {
            E::Io(_) | E::Format(_) => CliError::Io(e.to_string()),
            E::NoDetection { .. } => CliError::NoDetection(e.to_string()),
            E::Parameter(_) | E::IllConditionedBand { .. } => CliError::Config(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(jobs);
    }
    let pool = builder.build().map_err(|e| CliError::Other(e.to_string()))?;
    let ctx = commands::Context {
        cfg,
        out: cli.out,
        pool,
    };
    match cli.command {
        Command::Generate => commands::generate(&ctx),
        Command::Evaluate => commands::evaluate(&ctx),
        Command::Roundtrip => commands::roundtrip(&ctx),
        Command::Plot => commands::plot(&ctx),
        Command::Config => {
            print!("{}", ctx.cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
