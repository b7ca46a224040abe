mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult, ExitKind};

/// Text-to-SQL benchmark toolkit: corpora, splits, metrics, reranking,
/// value recovery and augmentation.
#[derive(Debug, Parser)]
#[command(name = "medsql", version, about)]
struct Cli {
    /// TOML file with default settings. Flags override it; environment
    /// variables override both.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for eval, rerank, recover and augment.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the execution database, import a release, or merge an external corpus.
    Ingest(commands::IngestArgs),
    /// Print corpus statistics.
    Stats(commands::StatsArgs),
    /// Assign samples to train/dev/test under the table-position rules.
    Split(commands::SplitArgs),
    /// Export schema-prefixed training pairs for one split.
    Linearize(commands::LinearizeArgs),
    /// Add back-translated paraphrases and template-generated samples.
    Augment(commands::AugmentArgs),
    /// Pick the first executable candidate from each beam.
    Rerank(commands::RerankArgs),
    /// Replace predicted condition values with the closest stored value.
    Recover(commands::RecoverArgs),
    /// Score predictions by logic form and execution accuracy.
    Eval(commands::EvalArgs),
}

fn run(cli: Cli) -> CliResult<()> {
    let config = RunConfig::load(cli.config.as_deref())?;
    let jobs = cli.jobs.or(config.jobs);
    let dispatch = move || match cli.command {
        Command::Ingest(a) => commands::ingest(a, &config),
        Command::Stats(a) => commands::stats(a, &config),
        Command::Split(a) => commands::split(a, &config),
        Command::Linearize(a) => commands::linearize(a, &config),
        Command::Augment(a) => commands::augment(a, &config),
        Command::Rerank(a) => commands::rerank(a, &config),
        Command::Recover(a) => commands::recover(a, &config),
        Command::Eval(a) => commands::eval(a, &config),
    };
    match jobs {
        Some(0) => Err(CliError::usage("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::new(ExitKind::Environment, e))?
            .install(dispatch),
        None => dispatch(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(ExitKind::Usage as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind as u8)
        }
    }
}
