use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the tracking engine, the cache/session stores and the
/// evaluation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("expected exactly {expected} points, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("out of range: {0}")]
    Range(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("no annotations to track from")]
    EmptyAnnotations,
    #[error("track is empty")]
    EmptyTrack,
    #[error("tracks are not aligned: {labels} label frames vs {truth} truth frames")]
    Alignment { labels: usize, truth: usize },
    #[error("labels carry no boxes (style '{0}' produces points only)")]
    NoBoxes(String),
    #[error("degenerate timing: no active annotation time in the event log")]
    DegenerateTiming,
    #[error("infeasible fixture: {0}")]
    Feasibility(String),
    #[error("policy does not fit style: {0}")]
    Policy(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("feature disabled for style '{style}': {feature}")]
    FeatureDisabled { style: String, feature: &'static str },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
