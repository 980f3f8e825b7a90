//! `score`: aggregate a trial log and print the metric tables.

use std::path::PathBuf;

use anyhow::{Context, Result};
use maskeval_core::report::{build_report, render_summary, write_json};
use maskeval_core::runner::load_trial_log;

use super::corpus_for_records;

#[derive(clap::Args, Debug)]
pub struct ScoreArgs {
    /// Trial log to aggregate.
    #[arg(long)]
    pub log: PathBuf,
    /// Corpus file; required for calculation logs (ground truth).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Report name; defaults to the log's file stem.
    #[arg(long)]
    pub name: Option<String>,
    /// Also write the report as JSON here.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

pub fn run(args: &ScoreArgs) -> Result<()> {
    let records = load_trial_log(&args.log)
        .with_context(|| format!("loading trial log {}", args.log.display()))?;
    let corpus = corpus_for_records(args.corpus.as_ref(), &records)?;
    let name = args.name.clone().unwrap_or_else(|| {
        args.log
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "report".to_string())
    });
    let report = build_report(&name, &records, &corpus)?;
    print!("{}", render_summary(&report));
    if let Some(path) = &args.json {
        write_json(&report, path).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
