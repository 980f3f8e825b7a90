//! Command-line interface of the masked-text evaluation toolkit.

mod commands;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "maskeval",
    version,
    about = "Mask corpora, render prompts, run campaigns, and report metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Mask a corpus over a mode and rate grid and write the masked
    /// documents plus a generation report
    Mask(commands::GridArgs),
    /// Generate multiple-choice questions from plain documents
    GenUqa(commands::gen_uqa::GenUqaArgs),
    /// Render the full prompt for every corpus grid cell
    Prompts(commands::GridArgs),
    /// Run or resume a campaign plan against a backend
    Run(commands::run::RunArgs),
    /// Print the metric tables aggregated from a trial log
    Score(commands::score::ScoreArgs),
    /// Build report files (JSON, CSV, SVG curves) from trial logs
    Report(commands::report::ReportArgs),
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Commands::Mask(args) => commands::mask::run(&args),
        Commands::GenUqa(args) => commands::gen_uqa::run(&args),
        Commands::Prompts(args) => commands::prompts::run(&args),
        Commands::Run(args) => commands::run::run(&args),
        Commands::Score(args) => commands::score::run(&args),
        Commands::Report(args) => commands::report::run(&args),
    }
}
