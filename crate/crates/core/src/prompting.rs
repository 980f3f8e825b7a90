//! Prompt assembly with byte-stable layouts: the sectioned multiple-choice
//! format and the guided-calculation format with its meta-information
//! tables.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::corpus::{CalcTask, EvidenceMode, QaItem};
use crate::llm::AnswerKey;
use crate::masking::{CodeStyle, MaskCode, MaskedCalcTask, MaskedQaItem};
use crate::metrics::{calc_oracle, CalcGround, MetricsError, TARGET_ORDER};

/// Opening line of every multiple-choice prompt.
pub const MSKQA_PREAMBLE: &str = "The following is a text and metadata related to the code terms within the text. Answer the question concisely according to the instructions.";

/// Instruction block of every multiple-choice prompt.
pub const MSKQA_INSTRUCTIONS: &str = "## Instructions
- Choose the answer from the options and respond with the corresponding number.
- Respond in JSON format as {'basis': str, 'answer': int}
- Use only the text as a reference for the basis";

/// Column header of the multiple-choice metadata table.
pub const METADATA_HEADER: &str = "part_of_speech | category | meaning | code";

/// Column header of the calculation meta-information tables.
pub const CALC_META_HEADER: &str = "Number Part of Speech Category Meaning";

/// Answer-format instruction appended to calculation prompts.
pub const CALC_ANSWER_INSTRUCTION: &str = "Respond with the filled values in JSON format as {\"NR\": number, \"P\": number, \"X\": number, \"N\": number, \"Y\": number, \"L\": number, \"E'\": number, \"D'\": number}.";

/// A ready-to-send prompt with everything needed to judge the response.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub item_id: String,
    pub prompt: String,
    pub key: AnswerKey,
    pub masked_count: usize,
    pub maskable_count: usize,
}

impl PromptBundle {
    /// Achieved masking rate; zero when nothing was maskable.
    pub fn observed_rate(&self) -> f64 {
        if self.maskable_count == 0 {
            0.0
        } else {
            self.masked_count as f64 / self.maskable_count as f64
        }
    }
}

/// Assemble the multiple-choice prompt for a masked item. Sections appear
/// as preamble, instructions, text (labelled as rationale when the item
/// carries one, omitted in the question-only setting), question, options
/// as a bracketed numbered list, and the code metadata table.
pub fn build_mskqa_prompt(
    masked: &MaskedQaItem,
    item: &QaItem,
) -> Result<PromptBundle, PromptError> {
    if masked.item_id != item.id {
        return Err(PromptError::Item {
            item: item.id.clone(),
            message: format!("masked item {} does not match", masked.item_id),
        });
    }
    let mut prompt = String::new();
    prompt.push_str(MSKQA_PREAMBLE);
    prompt.push('\n');
    prompt.push_str(MSKQA_INSTRUCTIONS);
    if let Some(text) = masked.render_text() {
        let label = match masked.evidence_mode {
            Some(EvidenceMode::Case1) | Some(EvidenceMode::Case2) => "## Text (Rationale)",
            _ => "## Text",
        };
        prompt.push('\n');
        prompt.push_str(label);
        prompt.push('\n');
        prompt.push_str(&text);
    }
    prompt.push_str("\n## Question\n");
    prompt.push_str(&masked.render_question());
    prompt.push_str("\n## Options\n");
    prompt.push_str(&python_list(&masked.render_options()));
    prompt.push_str("\n## Metadata\n");
    prompt.push_str(METADATA_HEADER);
    for code in &masked.doc.code_table {
        prompt.push('\n');
        prompt.push_str(&qa_metadata_row(code));
    }

    Ok(PromptBundle {
        item_id: item.id.clone(),
        prompt,
        key: AnswerKey::Choice {
            answer: item.answer_index + 1,
            n_options: item.options.len(),
        },
        masked_count: masked.doc.masked_count,
        maskable_count: masked.doc.maskable_count,
    })
}

/// Assemble the guided-calculation prompt: masked preamble, the document
/// behind a `#Document:` marker, `#Conditions` and `#Simulation` sections,
/// the answer-format instruction, and one meta-information table per code
/// namespace.
pub fn build_mskcal_prompt(
    masked: &MaskedCalcTask,
    task: &CalcTask,
) -> Result<PromptBundle, PromptError> {
    if masked.item_id != task.id {
        return Err(PromptError::Item {
            item: task.id.clone(),
            message: format!("masked task {} does not match", masked.item_id),
        });
    }
    let ground = calc_oracle(&task.givens)?;

    let mut prompt = String::new();
    prompt.push_str(&masked.preamble_masked);
    prompt.push_str("\n#Document: ");
    prompt.push_str(&masked.document.render(CodeStyle::Hashed));
    prompt.push_str("\n#Conditions\n");
    prompt.push_str(&masked.render_conditions());
    prompt.push_str("\n#Simulation\n");
    prompt.push_str(&masked.render_simulation());
    prompt.push('\n');
    prompt.push_str(CALC_ANSWER_INSTRUCTION);
    prompt.push_str("\n<Meta Information: Document>\n");
    prompt.push_str(CALC_META_HEADER);
    for code in &masked.document.code_table {
        prompt.push('\n');
        prompt.push_str(&calc_metadata_row(code));
    }
    prompt.push_str("\n<Meta Information: Conditions & Simulation>\n");
    prompt.push_str(CALC_META_HEADER);
    for code in &masked.condsim.code_table {
        prompt.push('\n');
        prompt.push_str(&calc_metadata_row(code));
    }

    let (masked_count, maskable_count) = masked.counts();
    Ok(PromptBundle {
        item_id: task.id.clone(),
        prompt,
        key: AnswerKey::Quantities(ground_map(&ground)),
        masked_count,
        maskable_count,
    })
}

/// All derived variables as a canonical-name map, in derivation order.
pub fn ground_map(ground: &CalcGround) -> BTreeMap<String, f64> {
    TARGET_ORDER
        .iter()
        .map(|name| {
            (
                name.to_string(),
                ground.get(name).expect("canonical name resolves"),
            )
        })
        .collect()
}

/// Numbered options as a bracketed, single-quoted list:
/// `['1. first', '2. second']`.
pub fn python_list(options: &[String]) -> String {
    let entries: Vec<String> = options
        .iter()
        .enumerate()
        .map(|(i, option)| {
            let escaped = option.replace('\\', "\\\\").replace('\'', "\\'");
            format!("'{}. {escaped}'", i + 1)
        })
        .collect();
    format!("[{}]", entries.join(", "))
}

/// One pipe-separated metadata line under [`METADATA_HEADER`].
pub fn qa_metadata_row(code: &MaskCode) -> String {
    format!(
        "{} | {} | {} | {}",
        code.pos_label, code.category, code.meaning, code.code
    )
}

/// One space-separated metadata line under [`CALC_META_HEADER`].
pub fn calc_metadata_row(code: &MaskCode) -> String {
    format!(
        "{} {} {} {}",
        code.code,
        calc_pos_words(&code.pos_label),
        code.category,
        code.meaning
    )
}

/// Part-of-speech tags spelled out for the calculation tables; plain nouns
/// read `General` and proper nouns `Proper Noun`.
fn calc_pos_words(pos_label: &str) -> String {
    pos_label
        .split(", ")
        .map(|pos| match pos {
            "NOUN" => "General",
            "PROPN" => "Proper Noun",
            "VERB" => "Verb",
            "ADJ" => "Adjective",
            "ADV" => "Adverb",
            other => other,
        })
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("item {item}: {message}")]
    Item { item: String, message: String },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}
