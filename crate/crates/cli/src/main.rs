mod backend;
mod commands;
mod manifest;
mod serve;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{AnalyzeArgs, CorrelateArgs, GenerateArgs, MineArgs, ScoreArgs, UsageError, WeighArgs};
use serve::ServeArgs;

/// Constituent-ordering minimal pairs: build, score, analyse, and collect
/// human judgments.
#[derive(Debug, Parser)]
#[command(name = "shiftbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expand a template lexicon into synthetic pairs.
    Generate(GenerateArgs),
    /// Extract pairs from bracketed treebank files.
    Mine(MineArgs),
    /// Attach weight profiles and ratios to pairs.
    Weigh(WeighArgs),
    /// Score pairs with a language-model backend.
    Score(ScoreArgs),
    /// Fit additive models, run ablations and bin preference curves.
    Analyze(AnalyzeArgs),
    /// Rank-correlate model preferences with aggregated human judgments.
    Correlate(CorrelateArgs),
    /// Run the judgment-collection HTTP service.
    Serve(ServeArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Mine(a) => commands::mine(a),
        Command::Weigh(a) => commands::weigh(a),
        Command::Score(a) => commands::score(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Correlate(a) => commands::correlate(a),
        Command::Serve(a) => serve::serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
