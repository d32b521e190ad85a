use thiserror::Error;

use crate::planner::PruneStats;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: convex hull needs at least 4 points, got {0}")]
    DegenerateInput(usize),
    #[error("degenerate shape: reference hull has zero volume")]
    DegenerateShape,
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("empty scene")]
    EmptyScene,
    #[error("too many objects: {0} (max {max})", max = crate::planner::MAX_OBJECTS)]
    TooManyObjects(usize),
    #[error("scene generation failed after {0} attempts")]
    GenerationFailed(usize),
    #[error("interpenetration not resolved after {iterations} iterations (max depth {depth:.3e})")]
    ResolutionFailed { iterations: usize, depth: f64 },
    #[error("settling did not converge after {0} passes")]
    SettleFailed(usize),
    #[error("unknown object id {0}")]
    UnknownObject(u32),
    #[error("duplicate object id {0}")]
    DuplicateObject(u32),
    #[error("no viable manipulation sequence ({} of {} nodes pruned)", .0.pruned_total(), .0.total_nodes)]
    NoViableSequence(Box<PruneStats>),
    #[error("scene rejected: {skipped} of {total} planning runs found no viable sequence")]
    SceneRejected { skipped: usize, total: usize },
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("unknown object class `{0}`")]
    UnknownClass(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("label mismatch: {0}")]
    LabelMismatch(String),
    #[error("invalid preference weights: {0}")]
    InvalidWeights(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported file version {0}")]
    UnsupportedVersion(u32),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
