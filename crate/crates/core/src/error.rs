use std::io;

use crate::model::ClassId;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("vector norm {norm:e} is at or below the degenerate threshold")]
    DegenerateVector { norm: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value in {0}")]
    NonFiniteValue(&'static str),

    #[error("non-finite loss encountered during {0}")]
    NonFiniteLoss(String),

    #[error("tape has already been consumed by backprop")]
    TapeConsumed,

    #[error("classifier has no classes")]
    EmptyClassifier,

    #[error("label {0} is not known to the classifier or prototype table")]
    UnknownLabel(ClassId),

    #[error("class {0} is already present")]
    DuplicateClass(ClassId),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("accuracy matrix is incomplete: {rows} of {tasks} rows filled")]
    IncompleteMatrix { rows: usize, tasks: usize },

    #[error("forgetting is undefined for a single task")]
    SingleTask,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("frozen backbone was modified during {0}")]
    FrozenBackboneModified(&'static str),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
