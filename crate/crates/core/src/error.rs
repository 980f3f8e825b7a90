//! Crate-level error type aggregating the per-module error enums.

use thiserror::Error;

/// Any error produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Annotation(#[from] crate::annotation::AnnotationError),
    #[error(transparent)]
    Masking(#[from] crate::masking::MaskingError),
    #[error(transparent)]
    Prompt(#[from] crate::prompting::PromptError),
    #[error(transparent)]
    Client(#[from] crate::llm::ClientError),
    #[error(transparent)]
    Runner(#[from] crate::runner::RunnerError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error(transparent)]
    Report(#[from] crate::report::ReportError),
}
