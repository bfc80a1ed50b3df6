use thiserror::Error;

use crate::events::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("interval has zero length; its frequency is unbounded")]
    ZeroLengthInterval,
    #[error("window duration must be non-zero")]
    ZeroDuration,
    #[error("frequency {0} does not describe a whole number of ticks")]
    NonIntegralDuration(String),
    #[error("operation is only defined for finite windows")]
    UnboundedWindow,
    #[error("invalid time moment set: {0}")]
    InvalidSet(String),
    #[error("invalid operator kernel: {0}")]
    InvalidKernel(String),
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("unknown outcome label `{0}`")]
    UnknownLabel(String),
    #[error("kernel is not deterministic (some row is not one-hot)")]
    NotDeterministic,
    #[error("kernel is not a refinement (some target has several sources)")]
    NotRefinement,
    #[error("stage {stage} has no realized event")]
    MissingRealization { stage: usize },
    #[error("stage index {index} out of range for a chain of {len} stages")]
    StageOutOfRange { index: usize, len: usize },
    #[error("expected a chain with {expected} stages, found {found}")]
    StageCount { expected: usize, found: usize },
    #[error("realized transition {source_label} -> {target} at stage {stage} has zero probability")]
    ImpossibleRealization {
        stage: usize,
        source_label: String,
        target: String,
    },
    #[error("sweep must contain at least one anchor")]
    EmptySweep,
    #[error("enumeration would visit {paths} paths, limit is {limit}")]
    TooLarge { paths: u128, limit: u128 },
    #[error("identity violated: {what} (gap {gap:e})")]
    IdentityViolation { what: &'static str, gap: f64 },
    #[error("chain is invalid ({} violation(s))", .0.len())]
    InvalidChain(Vec<Violation>),
}
