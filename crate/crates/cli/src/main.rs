use std::path::PathBuf;
use std::process::ExitCode;

use bistatic_ab::config::{run_file, validate_file, Overrides};
use clap::{Parser, Subcommand};

/// Capacity-distortion curves for bistatic sensing and communication.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Sweep points solved concurrently.
        #[arg(long)]
        workers: Option<usize>,
        /// Directory that relative output paths resolve against (defaults to
        /// the config file's directory).
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Master seed, overriding `solver.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config file without running any solver.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            workers,
            output_dir,
            seed,
        } => run_file(
            &config,
            &Overrides {
                workers,
                output_dir,
                seed,
            },
        ),
        Command::Validate { config } => {
            let diagnostics = validate_file(&config);
            for d in &diagnostics {
                eprintln!("{d}");
            }
            if diagnostics.is_empty() {
                println!("ok");
                0
            } else {
                1
            }
        }
    };
    ExitCode::from(code as u8)
}
