use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ssotfs_harness::{emit_csv, load_config, run_experiment, write_sidecar};

#[derive(Parser)]
#[command(name = "ssotfs", version, about = "Spatially-spread OTFS sensing and communication experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Replace the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the trial (or frame / channel-draw) count of the config.
    #[arg(long)]
    trials: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV table.
    Run {
        /// JSON experiment configuration.
        #[arg(long)]
        config: PathBuf,
        /// Destination of the CSV result table.
        #[arg(long)]
        out: PathBuf,
        /// Also write a JSON metadata sidecar to this path.
        #[arg(long)]
        metadata: Option<PathBuf>,
        /// Worker threads (defaults to all cores). Results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a config and print its resolved form.
    Validate {
        /// JSON experiment configuration.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out, metadata, threads, overrides } => (|| {
            let cfg = load_config(&config, overrides.seed, overrides.trials)?;
            let start = Instant::now();
            let table = run_experiment(&cfg, threads)?;
            emit_csv(&table, &out)?;
            if let Some(path) = metadata {
                write_sidecar(&cfg, &table, threads, start.elapsed().as_secs_f64(), &path)?;
            }
            eprintln!("wrote {} rows to {} in {:.2?}", table.rows.len(), out.display(), start.elapsed());
            Ok(())
        })(),
        Command::Validate { config, overrides } => load_config(&config, overrides.seed, overrides.trials).map(|cfg| {
            println!("{}", serde_json::to_string_pretty(&cfg).expect("config serialises"));
            eprintln!("config ok (sha256 {})", cfg.hash());
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
