//! `gen-uqa`: turn plain documents into multiple-choice question records.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use maskeval_core::corpus::{build_qa_generation_prompt, parse_generated_qa, write_qa_jsonl};
use maskeval_core::llm::{Completer, CompletionRequest, EndpointConfig, HttpClient};

#[derive(clap::Args, Debug)]
pub struct GenUqaArgs {
    /// Source document (plain text); repeat for several documents.
    #[arg(long = "document", required = true)]
    pub documents: Vec<PathBuf>,
    /// Output corpus file (JSON lines).
    #[arg(long)]
    pub out: PathBuf,
    /// Endpoint settings file (TOML) for live generation.
    #[arg(long, conflicts_with = "responses")]
    pub endpoint: Option<PathBuf>,
    /// API key for the endpoint; wins over the settings file and the
    /// MASKEVAL_API_KEY environment variable.
    #[arg(long)]
    pub api_key: Option<String>,
    /// Directory of pre-recorded generation responses, one
    /// `{document stem}.txt` per document.
    #[arg(long)]
    pub responses: Option<PathBuf>,
}

pub fn run(args: &GenUqaArgs) -> Result<()> {
    let client = match (&args.endpoint, &args.responses) {
        (Some(path), None) => {
            let mut config = EndpointConfig::from_toml_path(path)
                .with_context(|| format!("loading endpoint {}", path.display()))?;
            if let Some(key) = &args.api_key {
                config.api_key = Some(key.clone());
            } else if config.resolve_api_key().is_none()
                && std::env::var("MASKEVAL_API_KEY").is_ok()
            {
                config.api_key_env = Some("MASKEVAL_API_KEY".to_string());
            }
            Some(HttpClient::new(config)?)
        }
        (None, Some(_)) => None,
        _ => bail!("question generation needs exactly one of --endpoint or --responses"),
    };

    let mut stems = BTreeSet::new();
    let mut items = Vec::new();
    for path in &args.documents {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .filter(|s| !s.is_empty())
            .with_context(|| format!("{} has no usable file stem", path.display()))?;
        if !stems.insert(stem.clone()) {
            bail!("duplicate document stem {stem:?}; question ids would collide");
        }
        let document = fs::read_to_string(path)
            .with_context(|| format!("reading document {}", path.display()))?;
        let document = document.trim_end();
        if document.is_empty() {
            bail!("document {} is empty", path.display());
        }

        let response = match (&client, &args.responses) {
            (Some(client), _) => client.complete(&CompletionRequest {
                prompt: build_qa_generation_prompt(document),
                tag: stem.clone(),
                oracle_hint: None,
            })?,
            (None, Some(dir)) => {
                let response_path = dir.join(format!("{stem}.txt"));
                fs::read_to_string(&response_path)
                    .with_context(|| format!("reading response {}", response_path.display()))?
            }
            _ => unreachable!("validated above"),
        };

        let parsed = parse_generated_qa(&response, document, &stem)
            .with_context(|| format!("parsing the generation response for {stem:?}"))?;
        items.extend(parsed);
    }

    write_qa_jsonl(&args.out, &items)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "generated {} questions from {} documents into {}",
        items.len(),
        args.documents.len(),
        args.out.display()
    );
    Ok(())
}
