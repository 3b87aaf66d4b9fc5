//! `sinr`: command-line front end. Run `sinr --help` for usage.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use sinr_cli::commands::{run_command, RunOptions};
use sinr_cli::config::CommandName;
use sinr_cli::output::Format;
use sinr_cli::verify::{verify, Suite};
use sinr_cli::{CliError, CliResult, EXIT_CONFIG, EXIT_OK};
use std::path::PathBuf;
use std::process::ExitCode;

/// Large-system and Monte Carlo SINR analysis of MMSE and adaptive
/// least-squares receivers.
#[derive(Debug, Parser)]
#[command(name = "sinr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Large-system MMSE solution and SINR.
    Mmse(BatchArgs),
    /// Transient or steady-state ALS solution and SINR.
    Als(BatchArgs),
    /// ALS SINR versus training length for signature/training combinations.
    AlsSweep(BatchArgs),
    /// Window-shape factor tables over (beta, lbar) grids.
    Relation(BatchArgs),
    /// Finite-system Monte Carlo against large-system predictions.
    Simulate(BatchArgs),
    /// Throughput-optimal training length.
    Optimize(BatchArgs),
    /// Runs the built-in identity and oracle checks.
    Verify {
        /// Suite to run: identities, oracles or all.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Debug, Args)]
struct BatchArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output prefix (default: the config's `output`, else the config path
    /// without extension).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Data table format (overrides the config).
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Random seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = cli.threads.unwrap_or(0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure {threads} threads: {e}")))?;
    }
    let (name, args) = match cli.command {
        Command::Verify { suite } => {
            let checks = verify(suite.parse::<Suite>()?)?;
            println!("all {} checks passed", checks.len());
            return Ok(());
        }
        Command::Mmse(a) => (CommandName::Mmse, a),
        Command::Als(a) => (CommandName::Als, a),
        Command::AlsSweep(a) => (CommandName::AlsSweep, a),
        Command::Relation(a) => (CommandName::Relation, a),
        Command::Simulate(a) => (CommandName::Simulate, a),
        Command::Optimize(a) => (CommandName::Optimize, a),
    };
    let options = RunOptions {
        out: args.out,
        format: args.format,
        seed: args.seed,
        threads,
    };
    for path in run_command(name, &args.config, &options)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
