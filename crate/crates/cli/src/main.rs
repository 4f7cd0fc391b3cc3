mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

/// Bell-type nonclassicality tests for latent representations.
#[derive(Parser)]
#[command(name = "latentbell", version)]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Clone)]
pub struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: runs/<command>).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the forward matrix and write it in binary form.
    Matrix(commands::MatrixArgs),
    /// Ideal statistics of a latent model and their optimal witness.
    Witness(commands::WitnessArgs),
    /// Detection probability against the mixing weight, per noise level.
    DetectCurve(commands::DetectCurveArgs),
    /// Closed-form detection probability over thermal weight and mixing weight.
    Heatmap(commands::HeatmapArgs),
    /// Finite-trial protocol with bootstrap error estimate.
    Protocol(commands::ProtocolArgs),
    /// Spin activation readouts against the classical sphere model.
    Spin(commands::SpinArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::validation("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation(e.to_string()))?;
    }
    match cli.command {
        Command::Matrix(a) => commands::matrix(a),
        Command::Witness(a) => commands::witness(a),
        Command::DetectCurve(a) => commands::detect_curve(a),
        Command::Heatmap(a) => commands::heatmap(a),
        Command::Protocol(a) => commands::protocol(a),
        Command::Spin(a) => commands::spin(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("latentbell: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
