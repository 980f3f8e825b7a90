//! Masked-text evaluation toolkit.
//!
//! The crate covers the full pipeline for probing how much a language model's
//! answers depend on surface text versus internalized knowledge:
//!
//! * [`corpus`] — loading QA items and guided-calculation tasks, plus
//!   question-generation prompts and response parsing.
//! * [`annotation`] — deterministic tokenization, POS tagging, lemmas, and
//!   maskable-token selection.
//! * [`masking`] — seeded mask planning, code assignment, meta-information
//!   generation, and reversible mask application in four regimes.
//! * [`prompting`] — byte-stable prompt construction for multiple-choice and
//!   guided-calculation trials.
//! * [`llm`] — an OpenAI-compatible chat client plus deterministic mock
//!   oracles for offline campaigns.
//! * [`runner`] — campaign execution over the (item, mode, rate, trial) grid
//!   with resumable trial logs and tolerant response parsing.
//! * [`metrics`] — accuracy, normalized/paired/effective accuracy, knowledge
//!   index, no-answer rate, calculation scores, and rate-weighted indices.
//! * [`report`] — per-rate curve tables, summary tables, CSV/JSON mirrors,
//!   and dependency-free SVG line charts.

pub mod annotation;
pub mod corpus;
pub mod error;
pub mod llm;
pub mod masking;
pub mod metrics;
pub mod prompting;
pub mod report;
pub mod runner;
pub mod seed;
pub mod svg;

pub use annotation::{AnnotatedToken, Pos, RuleTagger, Span, Tagger};
pub use corpus::{CalcGivens, CalcTask, Corpus, EvidenceMode, QaItem, SourceTag};
pub use error::Error;
pub use llm::{AnswerKey, Completer, EndpointConfig, MockOracle, OracleKind};
pub use masking::{ExclusionRules, MaskCode, MaskMode, MaskedDocument, Segment};
pub use metrics::{CalcGround, CalcScores, MetricsCell};
pub use prompting::PromptBundle;
pub use report::Report;
pub use runner::{ParsedAnswer, RunPlan, TrialRecord};
