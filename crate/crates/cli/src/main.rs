//! `entroflow`: simulate entropy-dissipating flows, run their diagnostics,
//! the minimizing-movement scheme, inequality sweeps and 1-D transport.
//!
//! Exit status: 0 when every check passes, 1 on a violated inequality or
//! diagnostic (the CSV names the worst case), 2 on a configuration error.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CheckOpts, DiagnoseOpts, FileConfig, JkoOpts, SimulateOpts, W2Opts};

#[derive(Debug, Parser)]
#[command(
    name = "entroflow",
    version,
    about = "Entropy-dissipating gradient flows and functional inequalities"
)]
struct Cli {
    /// JSON file with parameters; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [env: ENTROFLOW_OUT] [default: entroflow-out]
    #[arg(long, global = true, env = "ENTROFLOW_OUT", hide_env = true)]
    out: Option<PathBuf>,
    /// Seed of the ChaCha8 generator behind every random bank [default: 7]
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the heat, Fokker-Planck or fast-diffusion equation
    Simulate(SimulateOpts),
    /// Integrate a finite-dimensional gradient flow and check its decay
    Diagnose(DiagnoseOpts),
    /// Run the minimizing-movement scheme in quantile coordinates
    Jko(JkoOpts),
    /// Sweep an inequality checker over a seeded test bank
    Check(CheckOpts),
    /// Quadratic Wasserstein distance between two densities on the line
    W2(W2Opts),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Diagnose(_) => "diagnose",
            Command::Jko(_) => "jko",
            Command::Check(_) => "check",
            Command::W2(_) => "w2",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration; `field` names the offending key.
    Config { field: String, message: String },
    /// Reading or writing files.
    Io(String),
    /// A numerical routine failed.
    Compute(entroflow::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Io(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { field, message } => write!(f, "invalid `{field}`: {message}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl From<entroflow::Error> for CliError {
    fn from(e: entroflow::Error) -> Self {
        match e {
            entroflow::Error::InvalidParameter { name, reason } => CliError::config(name, reason),
            entroflow::Error::Io(m) => CliError::Io(m),
            other => CliError::Compute(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Whether every check of a run passed.
pub type Verdict = bool;

fn run(cli: Cli) -> Result<Verdict, CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let name = cli.command.name();
    if let Some(c) = &file.command {
        if c != name {
            return Err(CliError::config(
                "command",
                format!("config is for `{c}` but `{name}` was requested"),
            ));
        }
    }
    let seed = cli.seed.or(file.seed).unwrap_or(config::DEFAULT_SEED);
    let out_dir = cli
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from(config::DEFAULT_OUT));
    let out = output::OutDir::create(out_dir)?;
    match cli.command {
        Command::Simulate(flags) => {
            let mut opts: SimulateOpts = file.params()?;
            opts.overlay(&flags);
            commands::simulate(&opts.resolve()?, seed, &out)
        }
        Command::Diagnose(flags) => {
            let mut opts: DiagnoseOpts = file.params()?;
            opts.overlay(&flags);
            commands::diagnose(&opts.resolve()?, seed, &out)
        }
        Command::Jko(flags) => {
            let mut opts: JkoOpts = file.params()?;
            opts.overlay(&flags);
            commands::jko(&opts.resolve()?, seed, &out)
        }
        Command::Check(flags) => {
            let mut opts: CheckOpts = file.params()?;
            opts.overlay(&flags);
            commands::check(&opts.resolve()?, seed, &out)
        }
        Command::W2(flags) => {
            let mut opts: W2Opts = file.params()?;
            opts.overlay(&flags);
            commands::w2(&opts.resolve()?, seed, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
