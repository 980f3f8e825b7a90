//! Token annotation: POS classes, spans, lemmas, and maskable-token selection.

mod lexicon;
mod tagger;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::masking::{ExclusionRules, MaskMode};

pub use lexicon::meta_entry;
pub(crate) use tagger::is_numeric_surface;
pub use tagger::{lemmatize, RuleTagger};

/// Half-open byte range into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// Part-of-speech class. The first five are content classes and the only
/// ones eligible for masking; the rest always stay literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Noun,
    Propn,
    Verb,
    Adj,
    Adv,
    Function,
    Number,
    Symbol,
    Other,
}

impl Pos {
    /// Content classes are the masking candidates.
    pub fn is_content(&self) -> bool {
        matches!(self, Pos::Noun | Pos::Propn | Pos::Verb | Pos::Adj | Pos::Adv)
    }

    /// Canonical upper-case label used in code tables.
    pub fn label(&self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Propn => "PROPN",
            Pos::Verb => "VERB",
            Pos::Adj => "ADJ",
            Pos::Adv => "ADV",
            Pos::Function => "FUNCTION",
            Pos::Number => "NUMBER",
            Pos::Symbol => "SYMBOL",
            Pos::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Option<Pos> {
        Some(match s {
            "NOUN" => Pos::Noun,
            "PROPN" => Pos::Propn,
            "VERB" => Pos::Verb,
            "ADJ" => Pos::Adj,
            "ADV" => Pos::Adv,
            "FUNCTION" => Pos::Function,
            "NUMBER" => Pos::Number,
            "SYMBOL" => Pos::Symbol,
            "OTHER" => Pos::Other,
            _ => return None,
        })
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One annotated token of the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedToken {
    pub surface: String,
    pub lemma: String,
    pub pos: Pos,
    pub span: Span,
    #[serde(default)]
    pub compound: bool,
}

/// Deterministic annotation backend. Implementations must return the same
/// token sequence for the same input every time.
pub trait Tagger {
    fn annotate(&self, text: &str) -> Result<Vec<AnnotatedToken>, AnnotationError>;
}

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("cannot annotate empty text")]
    EmptyText,
    #[error("token span {span} out of order (previous token ends at {prev_end})")]
    SpanOrder { span: Span, prev_end: usize },
    #[error("token span {span} exceeds text length {len}")]
    SpanOutOfBounds { span: Span, len: usize },
    #[error("token span {span}: surface {surface:?} does not match source slice {slice:?}")]
    SurfaceMismatch {
        span: Span,
        surface: String,
        slice: String,
    },
    #[error("token file line {line}: {message}")]
    TokenFile { line: usize, message: String },
    #[error("failed to read token file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Annotate `text` with the given tagger and validate the span invariants:
/// spans are in-bounds, strictly ordered, non-overlapping, and each token's
/// surface matches its source slice, so gaps plus surfaces reproduce the
/// text byte-exactly.
pub fn annotate(text: &str, tagger: &dyn Tagger) -> Result<Vec<AnnotatedToken>, AnnotationError> {
    if text.is_empty() {
        return Err(AnnotationError::EmptyText);
    }
    let tokens = tagger.annotate(text)?;
    validate_tokens(text, &tokens)?;
    Ok(tokens)
}

/// Check the span invariants for an externally produced token list.
pub fn validate_tokens(text: &str, tokens: &[AnnotatedToken]) -> Result<(), AnnotationError> {
    let mut prev_end = 0usize;
    for token in tokens {
        let span = token.span;
        if span.end <= span.start || span.start < prev_end {
            return Err(AnnotationError::SpanOrder { span, prev_end });
        }
        if span.end > text.len() || !text.is_char_boundary(span.start) || !text.is_char_boundary(span.end)
        {
            return Err(AnnotationError::SpanOutOfBounds {
                span,
                len: text.len(),
            });
        }
        let slice = &text[span.start..span.end];
        if slice != token.surface {
            return Err(AnnotationError::SurfaceMismatch {
                span,
                surface: token.surface.clone(),
                slice: slice.to_string(),
            });
        }
        prev_end = span.end;
    }
    Ok(())
}

/// Pre-annotated token list acting as a tagger, for externally produced
/// annotations loaded from a token file.
#[derive(Debug, Clone)]
pub struct PreAnnotated {
    tokens: Vec<AnnotatedToken>,
}

impl PreAnnotated {
    pub fn new(tokens: Vec<AnnotatedToken>) -> Self {
        PreAnnotated { tokens }
    }
}

impl Tagger for PreAnnotated {
    fn annotate(&self, _text: &str) -> Result<Vec<AnnotatedToken>, AnnotationError> {
        Ok(self.tokens.clone())
    }
}

/// Load a tab-separated token file: one token per line with fields
/// `surface<TAB>lemma<TAB>pos<TAB>start<TAB>end<TAB>compound`.
pub fn load_token_file(path: &Path) -> Result<Vec<AnnotatedToken>, AnnotationError> {
    let raw = std::fs::read_to_string(path).map_err(|source| AnnotationError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_token_file(&raw)
}

/// Parse the token-file format from an in-memory string.
pub fn parse_token_file(raw: &str) -> Result<Vec<AnnotatedToken>, AnnotationError> {
    let mut tokens = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(AnnotationError::TokenFile {
                line: line_no,
                message: format!("expected 6 tab-separated fields, found {}", fields.len()),
            });
        }
        let pos = Pos::parse(fields[2]).ok_or_else(|| AnnotationError::TokenFile {
            line: line_no,
            message: format!("unknown POS {:?}", fields[2]),
        })?;
        let parse_usize = |field: &str, name: &str| {
            field.parse::<usize>().map_err(|_| AnnotationError::TokenFile {
                line: line_no,
                message: format!("field {name} is not an integer: {field:?}"),
            })
        };
        let start = parse_usize(fields[3], "start")?;
        let end = parse_usize(fields[4], "end")?;
        let compound = match fields[5] {
            "0" | "false" => false,
            "1" | "true" => true,
            other => {
                return Err(AnnotationError::TokenFile {
                    line: line_no,
                    message: format!("compound flag must be 0/1/true/false, found {other:?}"),
                })
            }
        };
        tokens.push(AnnotatedToken {
            surface: fields[0].to_string(),
            lemma: fields[1].to_string(),
            pos,
            span: Span::new(start, end),
            compound,
        });
    }
    Ok(tokens)
}

/// Serialize tokens back into the token-file format.
pub fn write_token_file(tokens: &[AnnotatedToken]) -> String {
    let mut out = String::new();
    for t in tokens {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            t.surface,
            t.lemma,
            t.pos.label(),
            t.span.start,
            t.span.end,
            if t.compound { 1 } else { 0 }
        ));
    }
    out
}

/// Indices of tokens eligible for masking under `mode` and the task's
/// exclusion rules. Only content POS classes are candidates; LENIENT
/// additionally drops verbs and any token sharing a lemma with a verb token.
pub fn maskable_tokens(
    tokens: &[AnnotatedToken],
    mode: MaskMode,
    rules: &ExclusionRules,
) -> Vec<usize> {
    let verb_lemmas: HashSet<&str> = if mode == MaskMode::Lenient {
        tokens
            .iter()
            .filter(|t| t.pos == Pos::Verb)
            .map(|t| t.lemma.as_str())
            .collect()
    } else {
        HashSet::new()
    };
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            t.pos.is_content()
                && !(mode == MaskMode::Lenient
                    && (t.pos == Pos::Verb || verb_lemmas.contains(t.lemma.as_str())))
                && !rules.excludes(t)
        })
        .map(|(i, _)| i)
        .collect()
}
