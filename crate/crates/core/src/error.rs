use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse failure: {0}")]
    ParseFailure(String),

    #[error("ambiguous relation: {0}")]
    AmbiguousRelation(String),

    #[error("unknown position term `{0}`")]
    UnknownTerm(String),

    #[error("contradictory relations: edge {subject} -> {object} ({relation}) closes a cycle")]
    CycleDetected {
        subject: String,
        object: String,
        relation: String,
    },

    #[error("allocation overflow: {0}")]
    AllocationOverflow(String),

    #[error("expected {expected} maps, found {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("window {window_w}x{window_h} does not fit a {map_w}x{map_h} map")]
    WindowTooLarge {
        window_w: usize,
        window_h: usize,
        map_w: usize,
        map_h: usize,
    },

    #[error("plan does not fit stack: {0}")]
    PlanStackMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("cannot draw {requested} distinct prompts: {reason}")]
    ExhaustedSpace { requested: usize, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable name used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ParseFailure(_) => "parse_failure",
            Error::AmbiguousRelation(_) => "ambiguous_relation",
            Error::UnknownTerm(_) => "unknown_term",
            Error::CycleDetected { .. } => "cycle_detected",
            Error::AllocationOverflow(_) => "allocation_overflow",
            Error::KindMismatch { .. } => "kind_mismatch",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::WindowTooLarge { .. } => "window_too_large",
            Error::PlanStackMismatch(_) => "plan_stack_mismatch",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidValue(_) => "invalid_value",
            Error::Format(_) => "format",
            Error::ExhaustedSpace { .. } => "exhausted_space",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for errors raised while interpreting a prompt.
    pub fn is_parse_error(&self) -> bool {
        matches!(
            self,
            Error::ParseFailure(_)
                | Error::AmbiguousRelation(_)
                | Error::UnknownTerm(_)
                | Error::CycleDetected { .. }
                | Error::AllocationOverflow(_)
        )
    }
}
