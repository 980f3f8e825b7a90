//! Corpus types and loaders: multiple-choice QA items, guided calculation
//! tasks, and the prompt used to generate new QA items from raw documents.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Where a QA item comes from; drives defaults for masking and prompting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    /// News-style questions with a retrieved evidence passage.
    Rqa,
    /// Questions generated from foundational documents.
    Uqa,
    /// Arithmetic word problems with a worked rationale.
    Aqa,
}

impl SourceTag {
    pub const ALL: [SourceTag; 3] = [SourceTag::Rqa, SourceTag::Uqa, SourceTag::Aqa];

    pub fn as_str(&self) -> &'static str {
        match self {
            SourceTag::Rqa => "rqa",
            SourceTag::Uqa => "uqa",
            SourceTag::Aqa => "aqa",
        }
    }

    pub fn parse(s: &str) -> Option<SourceTag> {
        match s.to_ascii_lowercase().as_str() {
            "rqa" => Some(SourceTag::Rqa),
            "uqa" => Some(SourceTag::Uqa),
            "aqa" => Some(SourceTag::Aqa),
            _ => None,
        }
    }
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What accompanies an arithmetic question in the prompt: a rationale that
/// reuses the question's numbers without naming the answer (case 1), a
/// rationale with fresh numbers that does include the answer (case 2), or
/// no rationale at all (case 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceMode {
    Case1,
    Case2,
    Case3,
}

impl EvidenceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvidenceMode::Case1 => "case1",
            EvidenceMode::Case2 => "case2",
            EvidenceMode::Case3 => "case3",
        }
    }

    pub fn parse(s: &str) -> Option<EvidenceMode> {
        match s.to_ascii_lowercase().as_str() {
            "case1" | "1" => Some(EvidenceMode::Case1),
            "case2" | "2" => Some(EvidenceMode::Case2),
            "case3" | "3" => Some(EvidenceMode::Case3),
            _ => None,
        }
    }
}

impl fmt::Display for EvidenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One multiple-choice question with its supporting text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaItem {
    pub id: String,
    pub question: String,
    pub options: Vec<String>,
    /// Zero-based index into `options`.
    pub answer_index: usize,
    /// Supporting passage shown (masked) above the question. May be empty
    /// for arithmetic items that are asked question-only.
    #[serde(default)]
    pub evidence: String,
    /// Worked solution for arithmetic items; shown instead of the evidence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub source_tag: SourceTag,
}

/// Named quantities a calculation task starts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalcGivens {
    /// Units produced in the base year (A).
    pub production_2023: f64,
    /// Units planned for the following year (B).
    pub production_plan_2024: f64,
    /// Units in inventory at the cutoff date (C).
    pub inventory: f64,
    /// Planned revenue for the fiscal year, in currency units (D).
    pub planned_revenue: f64,
    /// Planned revenue for the affected model alone (E).
    pub model_revenue: f64,
    /// Cost charged per recalled unit.
    pub recall_unit_cost: f64,
    /// Fraction by which post-recall sales volume shrinks.
    pub reduction_rate: f64,
}

/// A guided calculation task: a figure-laden document, prose conditions,
/// and a step-by-step simulation whose blanks the model must fill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalcTask {
    pub id: String,
    /// Framing sentence shown before the document. When absent a neutral
    /// default is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preamble: Option<String>,
    pub document: String,
    pub conditions: String,
    pub simulation: String,
    pub givens: CalcGivens,
    /// Optional curated values for derived variables, checked against the
    /// arithmetic chain at load time.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub targets: BTreeMap<String, f64>,
}

impl CalcTask {
    /// The preamble, falling back to a neutral instruction when none is set.
    pub fn preamble_text(&self) -> String {
        self.preamble.clone().unwrap_or_else(|| {
            "Please fill in the blanks in the simulation according to the conditions.".to_string()
        })
    }
}

/// A loaded corpus of one kind or the other.
#[derive(Debug, Clone)]
pub enum Corpus {
    Qa(Vec<QaItem>),
    Calc(Vec<CalcTask>),
}

impl Corpus {
    /// Load a JSONL corpus, deciding the kind from the first record's shape
    /// (calculation tasks carry a `givens` object).
    pub fn from_path(path: &Path) -> Result<Corpus, CorpusError> {
        let text = std::fs::read_to_string(path)?;
        let first = text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .ok_or_else(|| CorpusError::Line {
                line: 1,
                message: "corpus file is empty".to_string(),
            })?;
        let value: serde_json::Value =
            serde_json::from_str(first).map_err(|e| CorpusError::Line {
                line: 1,
                message: e.to_string(),
            })?;
        if value.get("givens").is_some() {
            Ok(Corpus::Calc(load_calc_jsonl(path)?))
        } else {
            Ok(Corpus::Qa(load_qa_jsonl(path)?))
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Corpus::Qa(items) => items.len(),
            Corpus::Calc(tasks) => tasks.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Load and validate a QA corpus from a JSONL file (one object per line,
/// blank lines ignored).
pub fn load_qa_jsonl(path: &Path) -> Result<Vec<QaItem>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut items = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let item: QaItem = serde_json::from_str(trimmed).map_err(|e| CorpusError::Line {
            line: idx + 1,
            message: e.to_string(),
        })?;
        validate_qa_item(&item)?;
        items.push(item);
    }
    Ok(items)
}

/// Write a QA corpus as JSONL.
pub fn write_qa_jsonl(path: &Path, items: &[QaItem]) -> Result<(), CorpusError> {
    let mut file = File::create(path)?;
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| CorpusError::Line {
            line: 0,
            message: e.to_string(),
        })?;
        writeln!(file, "{line}")?;
    }
    Ok(())
}

/// Load and validate a calculation corpus from a JSONL file.
pub fn load_calc_jsonl(path: &Path) -> Result<Vec<CalcTask>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut tasks = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let task: CalcTask = serde_json::from_str(trimmed).map_err(|e| CorpusError::Line {
            line: idx + 1,
            message: e.to_string(),
        })?;
        validate_calc_task(&task)?;
        tasks.push(task);
    }
    Ok(tasks)
}

/// Check a QA item for internal consistency.
pub fn validate_qa_item(item: &QaItem) -> Result<(), CorpusError> {
    let fail = |message: String| {
        Err(CorpusError::Item {
            item: item.id.clone(),
            message,
        })
    };
    if item.id.trim().is_empty() {
        return fail("empty id".to_string());
    }
    if item.question.trim().is_empty() {
        return fail("empty question".to_string());
    }
    if item.options.len() < 2 {
        return fail(format!("need at least 2 options, got {}", item.options.len()));
    }
    if let Some(pos) = item.options.iter().position(|o| o.trim().is_empty()) {
        return fail(format!("option {} is empty", pos + 1));
    }
    if item.answer_index >= item.options.len() {
        return fail(format!(
            "answer_index {} out of range for {} options",
            item.answer_index,
            item.options.len()
        ));
    }
    match item.source_tag {
        SourceTag::Rqa | SourceTag::Uqa => {
            if item.evidence.trim().is_empty() {
                return fail("evidence required".to_string());
            }
        }
        SourceTag::Aqa => {
            if let Some(rationale) = &item.rationale {
                if answer_marker().is_match(rationale) {
                    return fail(
                        "rationale names the answer option; it must give only the working"
                            .to_string(),
                    );
                }
            }
        }
    }
    Ok(())
}

fn answer_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(?:answer|ans)\s*(?:is|:|=)\s*\(?[A-E]\)?(?:\b|$)").expect("marker regex")
    })
}

/// Check a calculation task: finite inputs, a usable denominator, and any
/// curated target values against the arithmetic chain.
pub fn validate_calc_task(task: &CalcTask) -> Result<(), CorpusError> {
    let fail = |message: String| {
        Err(CorpusError::Item {
            item: task.id.clone(),
            message,
        })
    };
    if task.id.trim().is_empty() {
        return fail("empty id".to_string());
    }
    for (name, text) in [
        ("document", &task.document),
        ("conditions", &task.conditions),
        ("simulation", &task.simulation),
    ] {
        if text.trim().is_empty() {
            return fail(format!("empty {name} section"));
        }
    }
    let g = &task.givens;
    for (name, value) in [
        ("production_2023", g.production_2023),
        ("production_plan_2024", g.production_plan_2024),
        ("inventory", g.inventory),
        ("planned_revenue", g.planned_revenue),
        ("model_revenue", g.model_revenue),
        ("recall_unit_cost", g.recall_unit_cost),
        ("reduction_rate", g.reduction_rate),
    ] {
        if !value.is_finite() {
            return fail(format!("given {name} is not finite"));
        }
    }
    if !(0.0..=1.0).contains(&g.reduction_rate) {
        return fail(format!("reduction_rate {} outside [0, 1]", g.reduction_rate));
    }
    let ground = crate::metrics::calc_oracle(g).map_err(|e| CorpusError::Item {
        item: task.id.clone(),
        message: e.to_string(),
    })?;
    for (name, stated) in &task.targets {
        let computed = ground.get(name).ok_or_else(|| CorpusError::Item {
            item: task.id.clone(),
            message: format!("unknown target variable {name}"),
        })?;
        let scale = computed.abs().max(1.0);
        if (stated - computed).abs() > 1e-6 * scale {
            return Err(CorpusError::Target {
                item: task.id.clone(),
                target: name.clone(),
                stated: *stated,
                computed,
            });
        }
    }
    Ok(())
}

/// Instructions for generating multiple-choice questions from a document.
pub const QA_GENERATION_INSTRUCTIONS: &str = "Based on the following text, create three simple multiple-choice questions that can be answered by a middle school student. Ensure that the questions do not require any background knowledge and can be answered using only the information provided in the text. Present the questions in the following format:
[Question text]
A) [Option A]
B) [Option B]
C) [Option C]
Answer: [Correct option]
";

/// Full generation prompt for one document.
pub fn build_qa_generation_prompt(document: &str) -> String {
    format!("{QA_GENERATION_INSTRUCTIONS}Text: {document}")
}

/// Parse a generation response in the `A) ... Answer: X` format into QA
/// items. The document becomes each item's evidence; ids are
/// `{id_prefix}-q1`, `-q2`, ... Incomplete trailing blocks are dropped;
/// no complete block at all is an error.
pub fn parse_generated_qa(
    response: &str,
    evidence: &str,
    id_prefix: &str,
) -> Result<Vec<QaItem>, CorpusError> {
    static OPTION: OnceLock<Regex> = OnceLock::new();
    static LEAD: OnceLock<Regex> = OnceLock::new();
    let option_re = OPTION
        .get_or_init(|| Regex::new(r"^\(?([A-Z])[.)]\s*(.+)$").expect("option regex"));
    let lead_re = LEAD.get_or_init(|| {
        Regex::new(r"(?i)^(?:question\s*\d*\s*[:.]\s*|q\d+\s*[:.]\s*|\d+\s*[.)]\s*)")
            .expect("lead regex")
    });

    let mut items = Vec::new();
    let mut question = String::new();
    let mut options: Vec<String> = Vec::new();
    let mut letters: Vec<char> = Vec::new();

    for raw in response.lines() {
        let line = raw.trim();
        if line.is_empty() || line.chars().all(|c| !c.is_alphanumeric()) {
            continue;
        }
        if let Some(caps) = option_re.captures(line) {
            letters.push(caps[1].chars().next().expect("captured letter"));
            options.push(caps[2].trim().to_string());
            continue;
        }
        if let Some(rest) = strip_ci(line, "answer:") {
            let picked = rest.chars().find(|c| c.is_ascii_alphabetic());
            let index = picked
                .map(|c| c.to_ascii_uppercase())
                .and_then(|c| letters.iter().position(|&l| l == c));
            match index {
                Some(answer_index) if !question.is_empty() && options.len() >= 2 => {
                    let item = QaItem {
                        id: format!("{id_prefix}-q{}", items.len() + 1),
                        question: std::mem::take(&mut question),
                        options: std::mem::take(&mut options),
                        answer_index,
                        evidence: evidence.to_string(),
                        rationale: None,
                        source_tag: SourceTag::Uqa,
                    };
                    validate_qa_item(&item)?;
                    items.push(item);
                }
                _ => {
                    return Err(CorpusError::Generation {
                        message: format!("unusable answer line {line:?}"),
                    })
                }
            }
            letters.clear();
            continue;
        }
        // Question text: a fresh block if options were pending, otherwise a
        // continuation line.
        if !options.is_empty() {
            question.clear();
            options.clear();
            letters.clear();
        }
        let cleaned = lead_re.replace(line, "");
        if !question.is_empty() {
            question.push(' ');
        }
        question.push_str(cleaned.trim());
    }

    if items.is_empty() {
        return Err(CorpusError::Generation {
            message: "no complete question blocks found".to_string(),
        });
    }
    Ok(items)
}

fn strip_ci<'a>(line: &'a str, prefix: &str) -> Option<&'a str> {
    if line.len() >= prefix.len() && line[..prefix.len()].eq_ignore_ascii_case(prefix) {
        Some(line[prefix.len()..].trim())
    } else {
        None
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("item {item}: {message}")]
    Item { item: String, message: String },
    #[error("item {item}: target {target} stated as {stated} but the chain gives {computed}")]
    Target {
        item: String,
        target: String,
        stated: f64,
        computed: f64,
    },
    #[error("generation response: {message}")]
    Generation { message: String },
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qa_item() -> QaItem {
        QaItem {
            id: "u1".to_string(),
            question: "What is declared?".to_string(),
            options: vec!["Independence".to_string(), "War".to_string()],
            answer_index: 0,
            evidence: "A declaration of independence.".to_string(),
            rationale: None,
            source_tag: SourceTag::Uqa,
        }
    }

    fn calc_task() -> CalcTask {
        CalcTask {
            id: "c1".to_string(),
            preamble: None,
            document: "Sales Plan".to_string(),
            conditions: "Recall cost 8,000 yen per unit.".to_string(),
            simulation: "NR = A - C =".to_string(),
            givens: CalcGivens {
                production_2023: 15840.0,
                production_plan_2024: 27720.0,
                inventory: 3960.0,
                planned_revenue: 2.772e9,
                model_revenue: 1.98e9,
                recall_unit_cost: 8000.0,
                reduction_rate: 0.25,
            },
            targets: BTreeMap::new(),
        }
    }

    #[test]
    fn qa_jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("qa.jsonl");
        let items = vec![qa_item()];
        write_qa_jsonl(&path, &items).unwrap();
        let loaded = load_qa_jsonl(&path).unwrap();
        assert_eq!(loaded, items);
    }

    #[test]
    fn answer_index_out_of_range_is_rejected() {
        let mut item = qa_item();
        item.answer_index = 2;
        let err = validate_qa_item(&item).unwrap_err();
        assert!(err.to_string().contains("answer_index"), "{err}");
    }

    #[test]
    fn missing_evidence_is_rejected_for_retrieval_items() {
        let mut item = qa_item();
        item.source_tag = SourceTag::Rqa;
        item.evidence = String::new();
        assert!(validate_qa_item(&item).is_err());
    }

    #[test]
    fn rationale_naming_the_answer_is_rejected() {
        let mut item = qa_item();
        item.source_tag = SourceTag::Aqa;
        item.rationale = Some("4(35) + y = 5(35), so the answer is C.".to_string());
        let err = validate_qa_item(&item).unwrap_err();
        assert!(err.to_string().contains("rationale"), "{err}");
        // a pure working is fine, even when it states the numeric result
        item.rationale = Some("4(35) + y = 5(35), or y = 35.".to_string());
        validate_qa_item(&item).unwrap();
    }

    #[test]
    fn calc_targets_are_checked_against_the_chain() {
        let mut task = calc_task();
        task.targets.insert("NR".to_string(), 11880.0);
        task.targets.insert("P".to_string(), 62500.0);
        task.targets.insert("E'".to_string(), 1.38996e9);
        validate_calc_task(&task).unwrap();

        task.targets.insert("P".to_string(), 62000.0);
        let err = validate_calc_task(&task).unwrap_err();
        assert!(matches!(err, CorpusError::Target { .. }), "{err}");
    }

    #[test]
    fn unknown_target_is_rejected() {
        let mut task = calc_task();
        task.targets.insert("Z".to_string(), 1.0);
        assert!(validate_calc_task(&task).is_err());
    }

    #[test]
    fn default_preamble_is_used_when_absent() {
        let task = calc_task();
        assert!(task.preamble_text().contains("fill in the blanks"));
    }

    #[test]
    fn corpus_sniffs_kind_from_first_record() {
        let dir = tempfile::tempdir().unwrap();
        let qa_path = dir.path().join("qa.jsonl");
        write_qa_jsonl(&qa_path, &[qa_item()]).unwrap();
        assert!(matches!(Corpus::from_path(&qa_path).unwrap(), Corpus::Qa(_)));

        let calc_path = dir.path().join("calc.jsonl");
        std::fs::write(&calc_path, serde_json::to_string(&calc_task()).unwrap()).unwrap();
        assert!(matches!(
            Corpus::from_path(&calc_path).unwrap(),
            Corpus::Calc(_)
        ));
    }

    #[test]
    fn generation_prompt_appends_the_document() {
        let prompt = build_qa_generation_prompt("Four score and seven years ago.");
        assert!(prompt.starts_with("Based on the following text"));
        assert!(prompt.ends_with("Text: Four score and seven years ago."));
        assert!(prompt.contains("A) [Option A]\nB) [Option B]\nC) [Option C]\nAnswer: [Correct option]"));
    }

    #[test]
    fn generated_blocks_are_parsed() {
        let response = "Question 1: What is the main purpose of the document?\n\
A) To establish a new government\n\
B) To explain why a separation is necessary\n\
C) To declare war\n\
Answer: B\n\
\n\
2. Who holds the powers of the earth?\n\
(A) The people\n\
(B) The king\n\
Answer: A) The people\n";
        let items = parse_generated_qa(response, "the document text", "decl").unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].id, "decl-q1");
        assert_eq!(items[0].question, "What is the main purpose of the document?");
        assert_eq!(items[0].options.len(), 3);
        assert_eq!(items[0].answer_index, 1);
        assert_eq!(items[0].evidence, "the document text");
        assert_eq!(items[0].source_tag, SourceTag::Uqa);
        assert_eq!(items[1].question, "Who holds the powers of the earth?");
        assert_eq!(items[1].answer_index, 0);
    }

    #[test]
    fn response_without_blocks_is_an_error() {
        let err = parse_generated_qa("no questions here", "doc", "x").unwrap_err();
        assert!(matches!(err, CorpusError::Generation { .. }), "{err}");
    }

    #[test]
    fn multiline_questions_are_joined() {
        let response = "What is the value\nof y?\nA) 31\nB) 35\nAnswer: B";
        let items = parse_generated_qa(response, "doc", "x").unwrap();
        assert_eq!(items[0].question, "What is the value of y?");
    }
}
