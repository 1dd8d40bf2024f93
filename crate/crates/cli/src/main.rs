use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use internex_cli::{cmd_figures, cmd_solve, cmd_sweep, cmd_tables, CliError, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "internex", version, about = "Market making with an internal exchange: experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the configured scenario for every offset and dump the surfaces.
    Solve(CommonArgs),
    /// Depth and execution-boundary datasets.
    Figures(CommonArgs),
    /// P&L and first-fill tables for all scenarios and offsets.
    Tables(CommonArgs),
    /// Fee and margin sweeps.
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulation seed, overriding `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let (Command::Solve(args) | Command::Figures(args) | Command::Tables(args) | Command::Sweep(args)) = &cli.command;
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_overrides(args.out.clone(), args.seed);
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
    }
    match cli.command {
        Command::Solve(_) => cmd_solve(&cfg),
        Command::Figures(_) => cmd_figures(&cfg),
        Command::Tables(_) => cmd_tables(&cfg),
        Command::Sweep(_) => cmd_sweep(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
