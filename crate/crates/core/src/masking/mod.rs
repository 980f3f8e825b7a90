//! Seeded, reversible text masking in four regimes.
//!
//! The pipeline is: [`plan_mask`] selects token indices at a controlled rate,
//! [`assign_codes`] groups the selection into per-lemma codes,
//! [`meta::generate_meta`] fills in the code table descriptions, and
//! [`apply_mask`] produces a [`MaskedDocument`] whose rendering replaces the
//! selected spans with code references and whose recovery map restores the
//! original text byte-exactly.

mod compose;
pub mod meta;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{maskable_tokens, AnnotatedToken, AnnotationError, Span};

pub use compose::{
    derivation_spans, mask_calc_task, mask_qa_item, mask_with_existing_codes, MaskedCalcTask,
    MaskedQaItem,
};
pub use meta::{generate_meta, GenerationReport, LexiconMeta, LlmMeta, MetaDescription, MetaGenerator};

/// Masking regime. Exactly one applies to a masked document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// Codes with generated descriptions; failed descriptions stay as solid
    /// (description-less) masks.
    Regular,
    /// Like regular, but solid masks are lifted back to the original words
    /// and dropped from the code table.
    PartialLifting,
    /// All descriptions blanked: every mask is solid, only POS and category
    /// survive in the table.
    Strict,
    /// Verbs (and any word sharing a lemma with a verb) are never masked.
    Lenient,
}

impl MaskMode {
    pub const ALL: [MaskMode; 4] = [
        MaskMode::Regular,
        MaskMode::PartialLifting,
        MaskMode::Strict,
        MaskMode::Lenient,
    ];

    pub fn parse(s: &str) -> Option<MaskMode> {
        Some(match s {
            "regular" => MaskMode::Regular,
            "partial_lifting" => MaskMode::PartialLifting,
            "strict" => MaskMode::Strict,
            "lenient" => MaskMode::Lenient,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            MaskMode::Regular => "regular",
            MaskMode::PartialLifting => "partial_lifting",
            MaskMode::Strict => "strict",
            MaskMode::Lenient => "lenient",
        }
    }
}

impl fmt::Display for MaskMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Task-level exclusions applied on top of the POS gate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExclusionRules {
    /// Drop numeric tokens (also catches number-like surfaces from external
    /// annotations that carry a content POS).
    #[serde(default)]
    pub exclude_numbers: bool,
    /// Drop tokens containing mathematical operator characters.
    #[serde(default)]
    pub exclude_math_symbols: bool,
    /// Whether '=' counts as a mathematical operator for the rule above.
    #[serde(default = "default_true")]
    pub equals_is_math_symbol: bool,
    /// Drop formula-variable tokens: single letters and one- or two-capital
    /// names with an optional trailing prime (`A`, `y`, `NR`, `E'`).
    #[serde(default)]
    pub exclude_single_char_vars: bool,
    /// Byte ranges that must stay literal (answer options, given values,
    /// derivation sections).
    #[serde(default)]
    pub protected_spans: Vec<Span>,
}

fn default_true() -> bool {
    true
}

impl ExclusionRules {
    /// No task-level exclusions; the POS gate still applies.
    pub fn none() -> Self {
        ExclusionRules {
            equals_is_math_symbol: true,
            ..Default::default()
        }
    }

    /// Rules for calculation-bearing tasks: numbers, operator-bearing
    /// tokens, and single-letter variables stay literal.
    pub fn calculation() -> Self {
        ExclusionRules {
            exclude_numbers: true,
            exclude_math_symbols: true,
            equals_is_math_symbol: true,
            exclude_single_char_vars: true,
            protected_spans: Vec::new(),
        }
    }

    /// True when the token must not be masked under these rules.
    pub fn excludes(&self, token: &AnnotatedToken) -> bool {
        if self.exclude_numbers
            && (token.pos == crate::annotation::Pos::Number
                || crate::annotation::is_numeric_surface(&token.surface))
        {
            return true;
        }
        if self.exclude_math_symbols {
            let mut operators = vec!['+', '/', '*'];
            if self.equals_is_math_symbol {
                operators.push('=');
            }
            // '-' joins compounds ("ZX-1000"), so it only counts as an
            // operator outside of them
            if token.surface.chars().any(|c| operators.contains(&c))
                || (!token.compound && token.surface.contains('-') && token.surface.len() > 1)
            {
                return true;
            }
        }
        if self.exclude_single_char_vars && is_variable_token(&token.surface) {
            return true;
        }
        self.protected_spans.iter().any(|p| p.overlaps(&token.span))
    }
}

/// Formula-variable shape: one alphabetic character, or two capitals, with an
/// optional trailing prime mark.
fn is_variable_token(surface: &str) -> bool {
    let stripped = surface.trim_end_matches(['\'', '\u{2019}', '\u{2032}']);
    let mut chars = stripped.chars();
    match (chars.next(), chars.next(), chars.next()) {
        (Some(c), None, _) => c.is_alphabetic(),
        (Some(a), Some(b), None) => a.is_ascii_uppercase() && b.is_ascii_uppercase(),
        _ => false,
    }
}

/// One entry of the meta-information table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskCode {
    /// Code identifier including namespace prefix, e.g. `r001` or `m012`.
    pub code: String,
    /// Lemma the code stands for (grouping key, case-insensitive).
    pub lemma: String,
    /// POS of the coded occurrences: first-seen POS first, any further POS
    /// appended comma-separated ("VERB, NOUN").
    pub pos_label: String,
    /// Abstract category ("Animal"); may be empty.
    pub category: String,
    /// Abstract description ("domestic animal"); empty means a solid mask.
    pub meaning: String,
}

impl MaskCode {
    /// Solid masks carry no description.
    pub fn is_solid(&self) -> bool {
        self.meaning.is_empty()
    }

    /// Whether the first-seen POS is PROPN (drives code rendering in the
    /// hash style).
    pub fn is_proper(&self) -> bool {
        self.pos_label.split(',').next().map(str::trim) == Some("PROPN")
    }
}

/// One piece of a masked document: literal source text or a code reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Literal { text: String, span: Span },
    Code { code: String, span: Span },
}

impl Segment {
    pub fn span(&self) -> Span {
        match self {
            Segment::Literal { span, .. } | Segment::Code { span, .. } => *span,
        }
    }
}

/// code -> occurrences (span, original surface), in span order.
pub type RecoveryMap = BTreeMap<String, Vec<(Span, String)>>;

/// Parameters a masked document was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskParams {
    pub mode: MaskMode,
    pub rate: f64,
    pub seed: u64,
    pub namespace: String,
}

/// How code references are rendered into text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeStyle {
    /// `<r001>` — multiple-choice prompts.
    Angled,
    /// `#t001`, or `<#m002>` when the code's first POS is PROPN —
    /// guided-calculation prompts.
    Hashed,
}

/// A masked document: alternating literal and code segments plus the code
/// table and the recovery material for exact unmasking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedDocument {
    pub segments: Vec<Segment>,
    pub code_table: Vec<MaskCode>,
    pub recovery_map: RecoveryMap,
    pub params: MaskParams,
    /// Number of tokens that were eligible for masking.
    pub maskable_count: usize,
    /// Number of selected tokens; under partial lifting this counts the
    /// pre-lifting selection.
    pub masked_count: usize,
    /// Byte length of the source text.
    pub source_len: usize,
}

#[derive(Debug, Error)]
pub enum MaskingError {
    #[error("masking rate {0} outside [0, 1]")]
    RateOutOfRange(f64),
    #[error("selection index {index} out of bounds for {tokens} tokens")]
    SelectionOutOfBounds { index: usize, tokens: usize },
    #[error("code {code} missing from recovery map")]
    CodeMissing { code: String },
    #[error("code {code} has no recovery entry for span {span}")]
    SpanMissing { code: String, span: Span },
    #[error("meta generation failed for {lemma:?}: {message}")]
    Meta { lemma: String, message: String },
    #[error("item {item}: {message}")]
    Item { item: String, message: String },
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
}

/// Round to nearest integer with ties going up. A small guard absorbs the
/// float error of rates like 0.15 whose products sit a hair under the tie.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor() as usize
}

/// Select the token indices to mask: the first `round(rate * n)` entries of
/// a seed-determined permutation of the maskable tokens, returned in
/// document order. Because the permutation depends only on the seed and the
/// candidate set, selections at lower rates are subsets of selections at
/// higher rates under the same seed.
pub fn plan_mask(
    tokens: &[AnnotatedToken],
    mode: MaskMode,
    rate: f64,
    seed: u64,
    rules: &ExclusionRules,
) -> Result<Vec<usize>, MaskingError> {
    if !(0.0..=1.0).contains(&rate) || rate.is_nan() {
        return Err(MaskingError::RateOutOfRange(rate));
    }
    let mut candidates = maskable_tokens(tokens, mode, rules);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    candidates.shuffle(&mut rng);
    let take = round_half_up(rate * candidates.len() as f64).min(candidates.len());
    let mut selection = candidates[..take].to_vec();
    selection.sort_unstable();
    Ok(selection)
}

/// Per-lemma code skeleton prior to meta generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSkeleton {
    pub code: String,
    pub lemma: String,
    /// Selected token indices covered by this code, in document order.
    pub token_indices: Vec<usize>,
}

/// Code assignment over a selection.
#[derive(Debug, Clone, Default)]
pub struct CodeAssignment {
    /// Skeletons in numbering order (first occurrence first).
    pub codes: Vec<CodeSkeleton>,
    /// token index -> code, for every selected token.
    pub by_token: BTreeMap<usize, String>,
    /// code -> (span, surface) occurrences.
    pub recovery: RecoveryMap,
}

/// Group the selected tokens by lemma (case-insensitive): one code per
/// distinct lemma, numbered by first occurrence and zero-padded to three
/// digits under the namespace prefix. Every occurrence of a coded lemma
/// within `scope` (the maskable candidates) is replaced as well — a literal
/// copy of a masked word elsewhere in the text would give the mask away.
pub fn assign_codes(
    tokens: &[AnnotatedToken],
    selection: &[usize],
    scope: &[usize],
    namespace: &str,
) -> Result<CodeAssignment, MaskingError> {
    let mut coded_lemmas: HashSet<String> = HashSet::new();
    for &idx in selection {
        let token = tokens
            .get(idx)
            .ok_or(MaskingError::SelectionOutOfBounds {
                index: idx,
                tokens: tokens.len(),
            })?;
        coded_lemmas.insert(token.lemma.to_lowercase());
    }
    let mut replaced: Vec<usize> = selection.to_vec();
    for &idx in scope {
        let token = tokens
            .get(idx)
            .ok_or(MaskingError::SelectionOutOfBounds {
                index: idx,
                tokens: tokens.len(),
            })?;
        if coded_lemmas.contains(&token.lemma.to_lowercase()) {
            replaced.push(idx);
        }
    }
    replaced.sort_unstable();
    replaced.dedup();

    let mut lemma_order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<usize>> = HashMap::new();
    for &idx in &replaced {
        let key = tokens[idx].lemma.to_lowercase();
        if !groups.contains_key(&key) {
            lemma_order.push(key.clone());
        }
        groups.entry(key).or_default().push(idx);
    }
    let mut assignment = CodeAssignment::default();
    for (n, lemma) in lemma_order.iter().enumerate() {
        let code = format!("{}{:03}", namespace, n + 1);
        let indices = groups.remove(lemma).unwrap_or_default();
        let mut occurrences = Vec::with_capacity(indices.len());
        for &idx in &indices {
            assignment.by_token.insert(idx, code.clone());
            occurrences.push((tokens[idx].span, tokens[idx].surface.clone()));
        }
        assignment.recovery.insert(code.clone(), occurrences);
        assignment.codes.push(CodeSkeleton {
            code,
            lemma: lemma.clone(),
            token_indices: indices,
        });
    }
    Ok(assignment)
}

/// Assemble the masked document: every token the assignment covers is
/// spliced over with its code. Under partial lifting, solid codes are
/// restored to their original surfaces and dropped from the table. The
/// recorded `masked_count` is the size of `selection` (the planned picks);
/// lemma-sharing may replace more tokens than that, and lifting fewer.
pub fn apply_mask(
    source: &str,
    tokens: &[AnnotatedToken],
    selection: &[usize],
    code_table: Vec<MaskCode>,
    assignment: &CodeAssignment,
    params: MaskParams,
    maskable_count: usize,
) -> Result<MaskedDocument, MaskingError> {
    let lifted: HashSet<String> = if params.mode == MaskMode::PartialLifting {
        code_table
            .iter()
            .filter(|c| c.is_solid())
            .map(|c| c.code.clone())
            .collect()
    } else {
        HashSet::new()
    };
    let mut segments = Vec::new();
    let mut cursor = 0usize;
    for (&idx, code) in &assignment.by_token {
        let token = tokens
            .get(idx)
            .ok_or(MaskingError::SelectionOutOfBounds {
                index: idx,
                tokens: tokens.len(),
            })?;
        if lifted.contains(code.as_str()) {
            continue; // restored to literal text below
        }
        if token.span.start > cursor {
            segments.push(Segment::Literal {
                text: source[cursor..token.span.start].to_string(),
                span: Span::new(cursor, token.span.start),
            });
        }
        segments.push(Segment::Code {
            code: code.clone(),
            span: token.span,
        });
        cursor = token.span.end;
    }
    if cursor < source.len() {
        segments.push(Segment::Literal {
            text: source[cursor..].to_string(),
            span: Span::new(cursor, source.len()),
        });
    }
    let retained: Vec<MaskCode> = code_table
        .into_iter()
        .filter(|c| !lifted.contains(c.code.as_str()))
        .collect();
    let recovery_map: RecoveryMap = assignment
        .recovery
        .iter()
        .filter(|(code, _)| retained.iter().any(|c| &c.code == *code))
        .map(|(code, occ)| (code.clone(), occ.clone()))
        .collect();
    Ok(MaskedDocument {
        segments,
        code_table: retained,
        recovery_map,
        params,
        maskable_count,
        masked_count: selection.len(),
        source_len: source.len(),
    })
}

impl MaskedDocument {
    /// Render the full masked text.
    pub fn render(&self, style: CodeStyle) -> String {
        self.render_range(0, self.source_len, style)
    }

    /// Render the masked text for the source byte range `[start, end)`.
    /// Literal segments are sliced at the boundaries; code segments never
    /// straddle them because section joins are whitespace.
    pub fn render_range(&self, start: usize, end: usize, style: CodeStyle) -> String {
        let proper: HashSet<&str> = self
            .code_table
            .iter()
            .filter(|c| c.is_proper())
            .map(|c| c.code.as_str())
            .collect();
        let mut out = String::new();
        for segment in &self.segments {
            let span = segment.span();
            if span.end <= start || span.start >= end {
                continue;
            }
            match segment {
                Segment::Literal { text, span } => {
                    let from = start.max(span.start) - span.start;
                    let to = end.min(span.end) - span.start;
                    out.push_str(&text[from..to]);
                }
                Segment::Code { code, .. } => match style {
                    CodeStyle::Angled => {
                        out.push('<');
                        out.push_str(code);
                        out.push('>');
                    }
                    CodeStyle::Hashed => {
                        if proper.contains(code.as_str()) {
                            out.push_str("<#");
                            out.push_str(code);
                            out.push('>');
                        } else {
                            out.push('#');
                            out.push_str(code);
                        }
                    }
                },
            }
        }
        out
    }

    /// Reconstruct the original source text byte-exactly.
    pub fn unmask(&self) -> Result<String, MaskingError> {
        let mut out = String::new();
        for segment in &self.segments {
            match segment {
                Segment::Literal { text, .. } => out.push_str(text),
                Segment::Code { code, span } => {
                    let occurrences =
                        self.recovery_map
                            .get(code)
                            .ok_or_else(|| MaskingError::CodeMissing {
                                code: code.clone(),
                            })?;
                    let surface = occurrences
                        .iter()
                        .find(|(s, _)| s == span)
                        .map(|(_, surface)| surface)
                        .ok_or_else(|| MaskingError::SpanMissing {
                            code: code.clone(),
                            span: *span,
                        })?;
                    out.push_str(surface);
                }
            }
        }
        Ok(out)
    }

    /// Masking rate actually recorded for this document.
    pub fn observed_rate(&self) -> f64 {
        if self.maskable_count == 0 {
            0.0
        } else {
            self.masked_count as f64 / self.maskable_count as f64
        }
    }
}

/// Run the whole pipeline over one text: annotate, plan, assign, describe,
/// apply.
#[allow(clippy::too_many_arguments)]
pub fn mask_text(
    source: &str,
    tagger: &dyn crate::annotation::Tagger,
    mode: MaskMode,
    rate: f64,
    seed: u64,
    rules: &ExclusionRules,
    generator: &dyn MetaGenerator,
    namespace: &str,
) -> Result<(MaskedDocument, GenerationReport), MaskingError> {
    let tokens = crate::annotation::annotate(source, tagger)?;
    let candidates = maskable_tokens(&tokens, mode, rules);
    let selection = plan_mask(&tokens, mode, rate, seed, rules)?;
    let assignment = assign_codes(&tokens, &selection, &candidates, namespace)?;
    let (code_table, report) = generate_meta(&tokens, &assignment, generator, mode);
    let params = MaskParams {
        mode,
        rate,
        seed,
        namespace: namespace.to_string(),
    };
    let doc = apply_mask(
        source,
        &tokens,
        &selection,
        code_table,
        &assignment,
        params,
        candidates.len(),
    )?;
    Ok((doc, report))
}
