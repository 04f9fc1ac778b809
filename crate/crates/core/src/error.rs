use thiserror::Error;

use crate::vocab::LabelId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown dependency label: {0}")]
    UnknownLabel(String),

    #[error("unknown relation: {0}")]
    UnknownRelation(String),

    #[error("unknown NE tag: {0}")]
    UnknownTag(String),

    #[error("invalid vocabulary: {0}")]
    InvalidVocab(String),

    #[error("invalid arc: {0}")]
    InvalidArc(String),

    #[error("duplicate arc (modifier {modifier}, head {head}, label {label})")]
    DuplicateArc {
        modifier: usize,
        head: usize,
        label: String,
    },

    #[error("probability mass {mass} for modifier {modifier} exceeds 1")]
    MassViolation { modifier: usize, mass: f64 },

    #[error("uncovered modifier(s) without any head candidate: {0:?}")]
    UncoveredModifiers(Vec<usize>),

    #[error("no projective tree has nonzero probability")]
    NoProjectiveTree,

    #[error("sentence length {n} exceeds the limit of {max}")]
    SizeGuard { n: usize, max: usize },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid forest edge: head {head}, label {label:?}, modifier {modifier}")]
    InvalidForestEdge {
        head: usize,
        label: LabelId,
        modifier: usize,
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("misaligned inputs: {0}")]
    Misaligned(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid span [{start}, {end}) for a sentence of {n} tokens")]
    InvalidSpan { start: usize, end: usize, n: usize },

    #[error("the NER head is disabled")]
    NerHeadDisabled,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite gradient in parameter {0}")]
    NonFiniteGradient(String),

    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
