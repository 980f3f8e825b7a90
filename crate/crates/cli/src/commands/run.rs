//! `run`: execute or resume a campaign plan against a backend.

use std::path::PathBuf;

use anyhow::{Context, Result};
use maskeval_core::annotation::RuleTagger;
use maskeval_core::llm::{EndpointConfig, HttpClient};
use maskeval_core::masking::{LexiconMeta, LlmMeta, MetaGenerator};
use maskeval_core::runner::{run_campaign, ParsedAnswer, RunPlan};
use maskeval_core::seed;

use super::{load_corpus, parse_evidence, parse_modes, parse_rates};

#[derive(clap::Args, Debug)]
pub struct RunArgs {
    /// Campaign plan file (TOML).
    #[arg(long)]
    pub plan: PathBuf,
    /// Corpus file the plan runs against.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Trial log, appended as trials finish; an existing log resumes the
    /// run.
    #[arg(long)]
    pub log: PathBuf,
    /// Override the plan's name.
    #[arg(long)]
    pub name: Option<String>,
    /// Override the plan's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the trials per grid cell.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Override the probed rates, comma separated.
    #[arg(long)]
    pub rates: Option<String>,
    /// Override the masking modes, comma separated.
    #[arg(long)]
    pub modes: Option<String>,
    /// Override the evidence setting for answer-evidence items.
    #[arg(long)]
    pub evidence: Option<String>,
    /// Override whether calculation derivation tails stay unmasked.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub restricted: Option<bool>,
    /// Endpoint settings file (TOML); replaces the plan's backend.
    #[arg(long)]
    pub endpoint: Option<PathBuf>,
    /// API key for the endpoint; wins over the settings file and the
    /// MASKEVAL_API_KEY environment variable.
    #[arg(long)]
    pub api_key: Option<String>,
    /// Endpoint settings file for LLM-written code descriptions; the
    /// bundled lexicon answers otherwise.
    #[arg(long)]
    pub meta_endpoint: Option<PathBuf>,
    /// Probability that a lexicon description is withheld (solid mask).
    #[arg(long, default_value_t = 0.0)]
    pub solid_probability: f64,
}

pub fn run(args: &RunArgs) -> Result<()> {
    let mut plan = RunPlan::from_toml_path(&args.plan)
        .with_context(|| format!("loading plan {}", args.plan.display()))?;
    if let Some(name) = &args.name {
        plan.name = name.clone();
    }
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    if let Some(trials) = args.trials {
        plan.trials = trials;
    }
    if let Some(rates) = &args.rates {
        plan.rates = parse_rates(rates)?;
    }
    if let Some(modes) = &args.modes {
        plan.modes = parse_modes(modes)?;
    }
    if let Some(evidence) = &args.evidence {
        plan.evidence_mode = Some(parse_evidence(evidence)?);
    }
    if let Some(restricted) = args.restricted {
        plan.restricted = restricted;
    }
    if let Some(path) = &args.endpoint {
        plan.endpoint = Some(
            EndpointConfig::from_toml_path(path)
                .with_context(|| format!("loading endpoint {}", path.display()))?,
        );
        // the flag replaces the plan's backend outright
        plan.oracle = None;
    }
    if let Some(endpoint) = plan.endpoint.as_mut() {
        if let Some(key) = &args.api_key {
            endpoint.api_key = Some(key.clone());
        } else if endpoint.resolve_api_key().is_none()
            && std::env::var("MASKEVAL_API_KEY").is_ok()
        {
            endpoint.api_key_env = Some("MASKEVAL_API_KEY".to_string());
        }
    }
    plan.validate()?;

    let corpus = load_corpus(&args.corpus)?;
    let completer = plan.build_completer()?;
    let tagger = RuleTagger::new();
    let meta_client; // outlives the generator that borrows it
    let generator: Box<dyn MetaGenerator + '_> = match &args.meta_endpoint {
        Some(path) => {
            let config = EndpointConfig::from_toml_path(path)
                .with_context(|| format!("loading meta endpoint {}", path.display()))?;
            meta_client = HttpClient::new(config)?;
            Box::new(LlmMeta::new(&meta_client))
        }
        None => Box::new(LexiconMeta::new(
            args.solid_probability,
            seed::derive(plan.seed, &["meta"]),
        )),
    };

    let records = run_campaign(
        &plan,
        &corpus,
        completer.as_ref(),
        &tagger,
        generator.as_ref(),
        Some(&args.log),
    )?;

    let correct = records.iter().filter(|r| r.correct == Some(true)).count();
    let missing = records
        .iter()
        .filter(|r| r.answer == ParsedAnswer::Missing)
        .count();
    println!(
        "{}: {} trials in {} ({correct} correct, {missing} missing)",
        plan.name,
        records.len(),
        args.log.display()
    );
    Ok(())
}
