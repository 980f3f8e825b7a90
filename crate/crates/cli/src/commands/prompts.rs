//! `prompts`: render the full prompt for every corpus grid cell.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use maskeval_core::annotation::RuleTagger;
use maskeval_core::corpus::{Corpus, SourceTag};
use maskeval_core::masking::{mask_calc_task, mask_qa_item, ExclusionRules, LexiconMeta, MaskMode};
use maskeval_core::prompting::{build_mskcal_prompt, build_mskqa_prompt};
use maskeval_core::seed;

use super::{cell_stem, load_corpus, parse_evidence, parse_modes, parse_rates, GridArgs};

pub fn run(args: &GridArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let modes = parse_modes(&args.modes)?;
    let rates = parse_rates(&args.rates)?;
    let evidence = parse_evidence(&args.evidence)?;
    let tagger = RuleTagger::new();
    let generator = LexiconMeta::new(args.solid_probability, args.meta_seed);

    let mut written = 0usize;
    match &corpus {
        Corpus::Qa(items) => {
            for item in items {
                let mask_seed = seed::derive(args.seed, &[&item.id]);
                let evidence_mode = (item.source_tag == SourceTag::Aqa).then_some(evidence);
                for &mode in &modes {
                    for &rate in &rates {
                        let masked = mask_qa_item(
                            item,
                            evidence_mode,
                            mode,
                            rate,
                            mask_seed,
                            &ExclusionRules::none(),
                            &tagger,
                            &generator,
                        )?;
                        let bundle = build_mskqa_prompt(&masked, item)?;
                        write_prompt(&args.out, &item.id, mode, rate, &bundle.prompt)?;
                        written += 1;
                    }
                }
            }
        }
        Corpus::Calc(tasks) => {
            for task in tasks {
                let mask_seed = seed::derive(args.seed, &[&task.id]);
                for &mode in &modes {
                    for &rate in &rates {
                        let masked = mask_calc_task(
                            task,
                            mode,
                            rate,
                            mask_seed,
                            args.restricted,
                            &tagger,
                            &generator,
                        )?;
                        let bundle = build_mskcal_prompt(&masked, task)?;
                        write_prompt(&args.out, &task.id, mode, rate, &bundle.prompt)?;
                        written += 1;
                    }
                }
            }
        }
    }

    println!("wrote {written} prompts under {}", args.out.display());
    Ok(())
}

fn write_prompt(out: &Path, item_id: &str, mode: MaskMode, rate: f64, prompt: &str) -> Result<()> {
    let dir = out.join(item_id);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(format!("{}.txt", cell_stem(mode, rate)));
    fs::write(&path, prompt).with_context(|| format!("writing {}", path.display()))
}
