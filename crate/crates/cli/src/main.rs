mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ggnn_relevance::dfg::AnnotationKind;
use ggnn_relevance::relevance::ExtremeMode;
use ggnn_relevance::{Error, ErrorClass};

use config::{CliConfig, FileConfig, Overrides};

/// Outcome prediction and activity relevance for labelled event logs.
#[derive(Parser)]
#[command(name = "ggnn-relevance", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Event log CSV.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Model file to write (`train`) or read (`relevance`, `dfg`).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Folds trained concurrently by `crossval` and `ablate`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    folds: Option<usize>,
    /// `frequency` or `relevance` (needs `--model`).
    #[arg(long, global = true, value_parser = parse_annotate)]
    annotate: Option<AnnotationKind>,
    /// Run a single ablation, `most` or `least`.
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<ExtremeMode>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Print log statistics.
    Stats,
    /// Train a model on the whole log.
    Train,
    /// k-fold cross-validation report.
    Crossval,
    /// Per-instance and aggregated relevance from a saved model.
    Relevance,
    /// Directly-follows graph as DOT.
    Dfg,
    /// Compare predictive quality after removing relevant activities.
    Ablate,
    /// Check analytic gradients against finite differences.
    Gradcheck,
    /// Write a synthetic log with a planted outcome driver.
    Synth,
}

fn parse_annotate(s: &str) -> Result<AnnotationKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<ExtremeMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 1,
        ErrorClass::Data => 2,
        ErrorClass::Numeric => 3,
    }
}

fn run(cli: Cli) -> ggnn_relevance::Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let cfg = CliConfig::resolve(
        file,
        Overrides {
            input: cli.input,
            out: cli.out,
            model: cli.model,
            seed: cli.seed,
            jobs: cli.jobs,
            folds: cli.folds,
            annotate: cli.annotate,
            mode: cli.mode,
        },
    )?;
    match cli.command {
        Command::Stats => commands::stats(&cfg),
        Command::Train => commands::train_cmd(&cfg),
        Command::Crossval => commands::crossval(&cfg),
        Command::Relevance => commands::relevance(&cfg),
        Command::Dfg => commands::dfg(&cfg),
        Command::Ablate => commands::ablate(&cfg),
        Command::Gradcheck => commands::gradcheck(&cfg),
        Command::Synth => commands::synth(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
