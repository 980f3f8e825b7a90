//! Masking composition for whole corpus items: QA items mask their text,
//! question, and options in one shared code space; calculation tasks mask
//! the document and the conditions/simulation block in two namespaces.

use std::sync::OnceLock;

use regex::Regex;

use crate::annotation::{annotate, Span, Tagger};
use crate::corpus::{CalcTask, EvidenceMode, QaItem, SourceTag};
use crate::seed;

use super::meta::{GenerationReport, MetaGenerator};
use super::{mask_text, CodeStyle, ExclusionRules, MaskMode, MaskedDocument, MaskingError};

/// A QA item masked over one combined code space, with the byte ranges of
/// its sections inside the combined source.
#[derive(Debug, Clone)]
pub struct MaskedQaItem {
    pub item_id: String,
    /// Combined source: text section (if any), question, options, joined
    /// with newlines.
    pub source: String,
    pub doc: MaskedDocument,
    /// Evidence or rationale range; absent when the prompt carries no text
    /// section (answer-evidence case 3).
    pub text_range: Option<Span>,
    pub question_range: Span,
    pub option_ranges: Vec<Span>,
    /// How the text section was chosen, for arithmetic items.
    pub evidence_mode: Option<EvidenceMode>,
    pub report: GenerationReport,
}

impl MaskedQaItem {
    pub fn render_text(&self) -> Option<String> {
        self.text_range
            .map(|r| self.doc.render_range(r.start, r.end, CodeStyle::Angled))
    }

    pub fn render_question(&self) -> String {
        self.doc
            .render_range(self.question_range.start, self.question_range.end, CodeStyle::Angled)
    }

    pub fn render_options(&self) -> Vec<String> {
        self.option_ranges
            .iter()
            .map(|r| self.doc.render_range(r.start, r.end, CodeStyle::Angled))
            .collect()
    }
}

/// Mask a QA item. The text part depends on the item's source and the
/// evidence mode: researcher- and generated-question items mask their
/// evidence, answer-evidence items mask the rationale (cases 1 and 2) or
/// carry no text at all (case 3). Codes are shared across all sections;
/// answer-evidence items additionally protect their options, numbers,
/// operator tokens, and single-letter variables.
#[allow(clippy::too_many_arguments)]
pub fn mask_qa_item(
    item: &QaItem,
    evidence_mode: Option<EvidenceMode>,
    mode: MaskMode,
    rate: f64,
    seed: u64,
    base_rules: &ExclusionRules,
    tagger: &dyn Tagger,
    generator: &dyn MetaGenerator,
) -> Result<MaskedQaItem, MaskingError> {
    let text_part: Option<&str> = match item.source_tag {
        SourceTag::Aqa => match evidence_mode {
            Some(EvidenceMode::Case1) | Some(EvidenceMode::Case2) => {
                Some(item.rationale.as_deref().ok_or_else(|| MaskingError::Item {
                    item: item.id.clone(),
                    message: "rationale required for evidence cases 1 and 2".to_string(),
                })?)
            }
            Some(EvidenceMode::Case3) => None,
            None => {
                return Err(MaskingError::Item {
                    item: item.id.clone(),
                    message: "answer-evidence items need an evidence mode".to_string(),
                })
            }
        },
        _ => Some(item.evidence.as_str()),
    };

    let mut source = String::new();
    let text_range = text_part.map(|text| {
        source.push_str(text);
        Span::new(0, text.len())
    });
    if text_range.is_some() {
        source.push('\n');
    }
    let question_start = source.len();
    source.push_str(&item.question);
    let question_range = Span::new(question_start, source.len());
    let mut option_ranges = Vec::with_capacity(item.options.len());
    for option in &item.options {
        source.push('\n');
        let start = source.len();
        source.push_str(option);
        option_ranges.push(Span::new(start, source.len()));
    }

    let mut rules = base_rules.clone();
    if item.source_tag == SourceTag::Aqa {
        rules.exclude_numbers = true;
        rules.exclude_math_symbols = true;
        rules.exclude_single_char_vars = true;
        rules.protected_spans.extend(option_ranges.iter().copied());
    }

    let (doc, report) = mask_text(&source, tagger, mode, rate, seed, &rules, generator, "r")?;
    Ok(MaskedQaItem {
        item_id: item.id.clone(),
        source,
        doc,
        text_range,
        question_range,
        option_ranges,
        evidence_mode,
        report,
    })
}

/// A calculation task masked in two namespaces: `m` codes for the document,
/// `t` codes for the conditions/simulation block. The instruction preamble
/// reuses codes already assigned to its lemmas.
#[derive(Debug, Clone)]
pub struct MaskedCalcTask {
    pub item_id: String,
    pub document_source: String,
    pub document: MaskedDocument,
    /// Conditions and simulation share one code space and one source.
    pub condsim_source: String,
    pub condsim: MaskedDocument,
    pub conditions_range: Span,
    pub simulation_range: Span,
    /// Preamble with already-coded lemmas substituted.
    pub preamble_masked: String,
    pub report: GenerationReport,
}

impl MaskedCalcTask {
    pub fn render_document(&self) -> String {
        self.document.render(CodeStyle::Hashed)
    }

    pub fn render_conditions(&self) -> String {
        self.condsim.render_range(
            self.conditions_range.start,
            self.conditions_range.end,
            CodeStyle::Hashed,
        )
    }

    pub fn render_simulation(&self) -> String {
        self.condsim.render_range(
            self.simulation_range.start,
            self.simulation_range.end,
            CodeStyle::Hashed,
        )
    }

    /// Combined masked/maskable counts across both namespaces.
    pub fn counts(&self) -> (usize, usize) {
        (
            self.document.masked_count + self.condsim.masked_count,
            self.document.maskable_count + self.condsim.maskable_count,
        )
    }
}

/// Mask a calculation task. Numbers, operator-bearing tokens, and
/// single-letter variables always stay literal; `restricted` additionally
/// protects the derivation tails of the simulation lines (everything from
/// the first `VAR =` on a line to its end).
pub fn mask_calc_task(
    task: &CalcTask,
    mode: MaskMode,
    rate: f64,
    seed: u64,
    restricted: bool,
    tagger: &dyn Tagger,
    generator: &dyn MetaGenerator,
) -> Result<MaskedCalcTask, MaskingError> {
    let doc_rules = ExclusionRules::calculation();
    let (document, doc_report) = mask_text(
        &task.document,
        tagger,
        mode,
        rate,
        seed::derive(seed, &["doc"]),
        &doc_rules,
        generator,
        "m",
    )?;

    let mut condsim_source = String::with_capacity(task.conditions.len() + task.simulation.len() + 1);
    condsim_source.push_str(&task.conditions);
    let conditions_range = Span::new(0, condsim_source.len());
    condsim_source.push('\n');
    let simulation_start = condsim_source.len();
    condsim_source.push_str(&task.simulation);
    let simulation_range = Span::new(simulation_start, condsim_source.len());

    let mut condsim_rules = ExclusionRules::calculation();
    if restricted {
        condsim_rules.protected_spans = derivation_spans(&task.simulation)
            .into_iter()
            .map(|s| Span::new(s.start + simulation_start, s.end + simulation_start))
            .collect();
    }
    let (condsim, condsim_report) = mask_text(
        &condsim_source,
        tagger,
        mode,
        rate,
        seed::derive(seed, &["condsim"]),
        &condsim_rules,
        generator,
        "t",
    )?;

    let preamble_masked = mask_with_existing_codes(
        &task.preamble_text(),
        &[&document, &condsim],
        tagger,
    )?;

    Ok(MaskedCalcTask {
        item_id: task.id.clone(),
        document_source: task.document.clone(),
        document,
        condsim_source,
        condsim,
        conditions_range,
        simulation_range,
        preamble_masked,
        report: doc_report.merge(&condsim_report),
    })
}

/// Byte ranges of derivation tails inside a simulation text: on each line,
/// everything from the first `VAR =` occurrence (one or two capitals with an
/// optional prime) to the end of the line.
pub fn derivation_spans(simulation: &str) -> Vec<Span> {
    static FORMULA: OnceLock<Regex> = OnceLock::new();
    let formula = FORMULA
        .get_or_init(|| Regex::new(r"\b[A-Z]{1,2}(?:['\u{2019}\u{2032}])?\s*=").expect("formula regex"));
    let mut spans = Vec::new();
    let mut offset = 0usize;
    for line in simulation.split_inclusive('\n') {
        let body = line.strip_suffix('\n').unwrap_or(line);
        if let Some(found) = formula.find(body) {
            spans.push(Span::new(offset + found.start(), offset + body.len()));
        }
        offset += line.len();
    }
    spans
}

/// Replace, in `text`, every content token whose lemma already carries a
/// code in one of the given masked documents by that code (document
/// namespaces take precedence in order). Tokens without a code stay literal.
pub fn mask_with_existing_codes(
    text: &str,
    docs: &[&MaskedDocument],
    tagger: &dyn Tagger,
) -> Result<String, MaskingError> {
    if text.is_empty() {
        return Ok(String::new());
    }
    let tokens = annotate(text, tagger)?;
    let mut out = String::new();
    let mut cursor = 0usize;
    for token in &tokens {
        if !token.pos.is_content() {
            continue;
        }
        let key = token.lemma.to_lowercase();
        let hit = docs.iter().find_map(|doc| {
            doc.code_table
                .iter()
                .find(|code| code.lemma == key)
                .map(|code| (code.code.clone(), code.is_proper()))
        });
        if let Some((code, proper)) = hit {
            out.push_str(&text[cursor..token.span.start]);
            if proper {
                out.push_str("<#");
                out.push_str(&code);
                out.push('>');
            } else {
                out.push('#');
                out.push_str(&code);
            }
            cursor = token.span.end;
        }
    }
    out.push_str(&text[cursor..]);
    Ok(out)
}
