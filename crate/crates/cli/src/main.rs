use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dmnls_cli::{run, Mode, Options};

#[derive(Parser)]
#[command(name = "dmnls", version, about = "Averaged NLS lattice simulator and continuum-limit checks")]
struct Cli {
    /// Threads for parallel member runs and ensemble sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one datum and write diagnostics and snapshots.
    Simulate { config: PathBuf },
    /// Compare lattice runs against a fine continuum-symbol reference.
    Converge { config: PathBuf },
    /// Check the functional inequalities on a seeded random ensemble.
    Verify { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (mode, config) = match cli.command {
        Command::Simulate { config } => (Mode::Simulate, config),
        Command::Converge { config } => (Mode::Converge, config),
        Command::Verify { config } => (Mode::Verify, config),
    };
    match run(mode, &config, &Options::from_env(cli.workers)) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
