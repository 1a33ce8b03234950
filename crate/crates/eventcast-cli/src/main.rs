//! `eventcast`: preprocess flow datasets, train and select attack
//! classifiers, sweep feature counts, and forecast the attack-class
//! distribution of the event space.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{effective_config, Overrides};

#[derive(Parser)]
#[command(
    name = "eventcast",
    version,
    about = "Anticipate attack classes from flow-record datasets",
    after_help = "Exit codes: 0 success, 2 config error, 3 data error, 4 internal invariant violation."
)]
struct Cli {
    /// TOML config file; flags override its keys (dots become dashes).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, encode, and discretize the configured dataset.
    Preprocess,
    /// Train the configured learners, report metrics, save the best model.
    Train,
    /// Sweep feature counts (k-best or recursive elimination).
    Sweep,
    /// Classify the saved model's event space into an attack forecast.
    Forecast,
    /// Generate a synthetic labeled dataset for CI and experiments.
    Synth {
        /// Rows to generate (at least 10 per class).
        #[arg(long, default_value_t = 2000)]
        rows: usize,
        /// Attack classes to plant.
        #[arg(long, default_value_t = 5)]
        classes: usize,
        /// Output CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize the artifacts in the output directory.
    Report,
}

fn init_threads(config_threads: usize) {
    let threads = std::env::var("EVENTCAST_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(config_threads);
    if threads > 0 {
        // ignore the error if a pool already exists (tests call in-process)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn run(cli: Cli) -> eventcast::Result<()> {
    let config = effective_config(cli.config.as_deref(), &cli.overrides)?;
    init_threads(config.threads);
    match cli.command {
        Command::Preprocess => commands::cmd_preprocess(&config),
        Command::Train => commands::cmd_train(&config),
        Command::Sweep => commands::cmd_sweep(&config),
        Command::Forecast => commands::cmd_forecast(&config),
        Command::Synth { rows, classes, out } => commands::cmd_synth(&config, rows, classes, out),
        Command::Report => commands::cmd_report(&config),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
