//! Subcommand implementations and the flag types they share.

pub mod gen_uqa;
pub mod mask;
pub mod prompts;
pub mod report;
pub mod run;
pub mod score;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use maskeval_core::corpus::{Corpus, EvidenceMode};
use maskeval_core::masking::MaskMode;
use maskeval_core::runner::{rate_key, TrialRecord};

/// Grid and generator options shared by the artifact-writing commands.
#[derive(clap::Args, Debug)]
pub struct GridArgs {
    /// Corpus file: JSON lines of question or calculation records.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Directory the artifacts are written into.
    #[arg(long)]
    pub out: PathBuf,
    /// Masking modes, comma separated: regular, partial_lifting, strict,
    /// lenient.
    #[arg(long, default_value = "regular")]
    pub modes: String,
    /// Masking rates in [0, 1], comma separated.
    #[arg(long, default_value = "0.2,0.4,0.6,0.8,1.0")]
    pub rates: String,
    /// Base seed; each item derives its own masking stream from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Text setting for answer-evidence items: case1, case2, or case3.
    #[arg(long, default_value = "case1")]
    pub evidence: String,
    /// Keep the derivation tails of calculation tasks unmasked.
    #[arg(long)]
    pub restricted: bool,
    /// Probability that a code description is withheld (solid mask).
    #[arg(long, default_value_t = 0.0)]
    pub solid_probability: f64,
    /// Seed of the description generator's withholding draws.
    #[arg(long, default_value_t = 0)]
    pub meta_seed: u64,
}

/// Parse a comma-separated masking-mode list.
pub fn parse_modes(list: &str) -> Result<Vec<MaskMode>> {
    let mut modes = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let mode = MaskMode::parse(part).with_context(|| {
            format!(
                "unknown masking mode {part:?} (expected regular, partial_lifting, \
                 strict, or lenient)"
            )
        })?;
        if !modes.contains(&mode) {
            modes.push(mode);
        }
    }
    if modes.is_empty() {
        bail!("no masking modes given");
    }
    Ok(modes)
}

/// Parse a comma-separated rate list; every rate must lie in [0, 1].
pub fn parse_rates(list: &str) -> Result<Vec<f64>> {
    let mut rates = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let rate: f64 = part
            .parse()
            .with_context(|| format!("rate {part:?} is not a number"))?;
        if !rate.is_finite() || !(0.0..=1.0).contains(&rate) {
            bail!("rate {rate} outside [0, 1]");
        }
        rates.push(rate);
    }
    if rates.is_empty() {
        bail!("no masking rates given");
    }
    Ok(rates)
}

/// Parse an evidence-case name.
pub fn parse_evidence(name: &str) -> Result<EvidenceMode> {
    EvidenceMode::parse(name).with_context(|| {
        format!("unknown evidence setting {name:?} (expected case1, case2, or case3)")
    })
}

/// Load a corpus file with a path-bearing error.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    Corpus::from_path(path).with_context(|| format!("loading corpus {}", path.display()))
}

/// Load the corpus when given; question logs aggregate fine without one,
/// calculation logs need it for the arithmetic ground truth.
pub fn corpus_for_records(path: Option<&PathBuf>, records: &[TrialRecord]) -> Result<Corpus> {
    match path {
        Some(path) => load_corpus(path),
        None => {
            if records.iter().any(|r| r.source_tag.is_none()) {
                bail!("calculation logs need --corpus for the arithmetic ground truth");
            }
            Ok(Corpus::Qa(Vec::new()))
        }
    }
}

/// File stem of one grid cell's artifact: `{mode}_{rate key}`.
pub fn cell_stem(mode: MaskMode, rate: f64) -> String {
    format!("{}_{:05}", mode.as_str(), rate_key(rate))
}
