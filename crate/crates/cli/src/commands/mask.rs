//! `mask`: write masked documents and a generation report for a corpus grid.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use maskeval_core::annotation::RuleTagger;
use maskeval_core::corpus::{Corpus, EvidenceMode, SourceTag};
use maskeval_core::masking::{
    mask_calc_task, mask_qa_item, ExclusionRules, GenerationReport, LexiconMeta, MaskMode,
    MaskedCalcTask, MaskedQaItem,
};
use maskeval_core::prompting::{
    calc_metadata_row, qa_metadata_row, CALC_META_HEADER, METADATA_HEADER,
};
use maskeval_core::seed;
use serde::Serialize;

use super::{cell_stem, load_corpus, parse_evidence, parse_modes, parse_rates, GridArgs};

/// One emitted file in the generation report. `codes_solid` counts
/// descriptions the generator left empty, before any mode-level blanking
/// (strict blanks every meaning in the emitted table regardless).
#[derive(Debug, Serialize)]
struct MaskEntry {
    item_id: String,
    mode: String,
    rate: f64,
    file: String,
    maskable_count: usize,
    masked_count: usize,
    codes_total: usize,
    codes_solid: usize,
    codes_failed: usize,
}

pub fn run(args: &GridArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let modes = parse_modes(&args.modes)?;
    let rates = parse_rates(&args.rates)?;
    let evidence = parse_evidence(&args.evidence)?;
    let tagger = RuleTagger::new();
    let generator = LexiconMeta::new(args.solid_probability, args.meta_seed);

    let mut entries: Vec<MaskEntry> = Vec::new();
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
                        entries.push(write_cell(
                            &args.out,
                            &item.id,
                            mode,
                            rate,
                            &qa_artifact(&masked),
                            masked.doc.masked_count,
                            masked.doc.maskable_count,
                            &masked.report,
                        )?);
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
                        let (masked_count, maskable_count) = masked.counts();
                        entries.push(write_cell(
                            &args.out,
                            &task.id,
                            mode,
                            rate,
                            &calc_artifact(&masked),
                            masked_count,
                            maskable_count,
                            &masked.report,
                        )?);
                    }
                }
            }
        }
    }

    let report_path = args.out.join("mask_report.json");
    let json =
        serde_json::to_string_pretty(&entries).context("serializing the generation report")?;
    fs::write(&report_path, json + "\n")
        .with_context(|| format!("writing {}", report_path.display()))?;

    let solid: usize = entries.iter().map(|e| e.codes_solid).sum();
    println!(
        "wrote {} masked documents under {} ({solid} solid codes); report: {}",
        entries.len(),
        args.out.display(),
        report_path.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn write_cell(
    out: &Path,
    item_id: &str,
    mode: MaskMode,
    rate: f64,
    text: &str,
    masked_count: usize,
    maskable_count: usize,
    report: &GenerationReport,
) -> Result<MaskEntry> {
    let dir = out.join(item_id);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let file = format!("{item_id}/{}.txt", cell_stem(mode, rate));
    let path = out.join(&file);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(MaskEntry {
        item_id: item_id.to_string(),
        mode: mode.as_str().to_string(),
        rate,
        file,
        maskable_count,
        masked_count,
        codes_total: report.total,
        codes_solid: report.solid,
        codes_failed: report.failed,
    })
}

/// Masked question item as inspectable text: sections plus the code table.
fn qa_artifact(masked: &MaskedQaItem) -> String {
    let mut text = String::new();
    if let Some(body) = masked.render_text() {
        let label = match masked.evidence_mode {
            Some(EvidenceMode::Case1) | Some(EvidenceMode::Case2) => "## Text (Rationale)",
            _ => "## Text",
        };
        text.push_str(label);
        text.push('\n');
        text.push_str(&body);
        text.push('\n');
    }
    text.push_str("## Question\n");
    text.push_str(&masked.render_question());
    text.push_str("\n## Options\n");
    for (number, option) in masked.render_options().iter().enumerate() {
        text.push_str(&format!("{}. {option}\n", number + 1));
    }
    text.push_str("## Metadata\n");
    text.push_str(METADATA_HEADER);
    for code in &masked.doc.code_table {
        text.push('\n');
        text.push_str(&qa_metadata_row(code));
    }
    text.push('\n');
    text
}

/// Masked calculation task as inspectable text: every section plus both
/// code tables.
fn calc_artifact(masked: &MaskedCalcTask) -> String {
    let mut text = String::new();
    text.push_str(&masked.preamble_masked);
    text.push_str("\n#Document: ");
    text.push_str(&masked.render_document());
    text.push_str("\n#Conditions\n");
    text.push_str(&masked.render_conditions());
    text.push_str("\n#Simulation\n");
    text.push_str(&masked.render_simulation());
    text.push_str("\n<Meta Information: Document>\n");
    text.push_str(CALC_META_HEADER);
    for code in &masked.document.code_table {
        text.push('\n');
        text.push_str(&calc_metadata_row(code));
    }
    text.push_str("\n<Meta Information: Conditions & Simulation>\n");
    text.push_str(CALC_META_HEADER);
    for code in &masked.condsim.code_table {
        text.push('\n');
        text.push_str(&calc_metadata_row(code));
    }
    text.push('\n');
    text
}
