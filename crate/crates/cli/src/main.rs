//! `dde`: run data-driven elasticity experiments from JSON configs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::Options;

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Io(String),
    NotConverged(String),
    CheckFailed(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) | Failure::Io(_) => 1,
            Failure::NotConverged(_) | Failure::CheckFailed(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Io(m) | Failure::NotConverged(m) | Failure::CheckFailed(m) => m,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dde", version, about = "Data-driven elasticity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the parallel kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one data-driven problem.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sample the material at decreasing resolution and compare with the limit.
    Convergence {
        #[arg(long)]
        config: PathBuf,
    },
    /// Relaxation of two-well data.
    Relax {
        #[command(subcommand)]
        command: RelaxCommand,
    },
    /// Run the acceptance suite.
    Selftest,
}

#[derive(Debug, Subcommand)]
enum RelaxCommand {
    /// Incompatibility range and extremal connection.
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Classify states read from CSV.
    Membership {
        #[arg(long)]
        config: PathBuf,
    },
    /// Split a relaxed state and layer it on a mesh.
    Laminate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Convex envelope of the 1D two-well energy.
    Envelope {
        #[arg(long)]
        config: PathBuf,
    },
}

fn set_threads(n: usize) -> Result<(), Failure> {
    if n == 0 {
        return Err(Failure::Input("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Input(format!("--threads: {e}")))?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        set_threads(n)?;
    }
    let opts = Options { out: cli.out, seed: cli.seed };
    match cli.command {
        Command::Solve { config } => commands::solve(&config, &opts),
        Command::Convergence { config } => commands::convergence(&config, &opts),
        Command::Relax { command } => match command {
            RelaxCommand::Analyze { config } => commands::relax_analyze(&config, &opts),
            RelaxCommand::Membership { config } => commands::relax_membership(&config, &opts),
            RelaxCommand::Laminate { config } => commands::relax_laminate(&config, &opts),
            RelaxCommand::Envelope { config } => commands::relax_envelope(&config, &opts),
        },
        Command::Selftest => commands::selftest(&opts),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
