use thiserror::Error;

/// Errors shared across the construction modules.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    #[error("ambient dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("basis vector {index} is linearly dependent on the preceding ones")]
    DependentBasis { index: usize },

    #[error("subspace dimensions must be strictly increasing (violated at position {index})")]
    NonIncreasingDims { index: usize },

    #[error("subspace dimension {dim} must stay below the ambient dimension {ambient}")]
    DimExceedsAmbient { dim: usize, ambient: usize },

    #[error("deviation values must be non-increasing (violated at position {index})")]
    NonIncreasingValues { index: usize },

    #[error("deviation values must be non-negative (violated at position {index})")]
    NegativeValue { index: usize },

    #[error("no start index satisfies the tail condition d_n >= sum of later values")]
    NoAdmissibleStart,

    #[error("chain validation failed: {reason}")]
    InvalidChain { reason: String },

    #[error("solver failure: {context}")]
    SolverFailure { context: String },

    #[error("point lies inside the subspace; no norming functional exists")]
    PointInsideSubspace,

    #[error("targets must decrease strictly (violated at position {index})")]
    NotStrictlyDecreasing { index: usize },

    #[error("anchor element lies inside the top subspace of the chain")]
    AnchorInsideTop,

    #[error(
        "certification failed at index {index}: claimed {claimed}, certificate [{lower}, {upper}]"
    )]
    CertificationFailure {
        index: usize,
        claimed: f64,
        lower: f64,
        upper: f64,
    },

    #[error("degenerate target pair: u = {u} must exceed v = {v}")]
    DegenerateTarget { u: f64, v: f64 },

    #[error("no bracket for the root search: {context}")]
    NoBracket { context: String },

    #[error("precondition violated: {context}")]
    PreconditionViolation { context: String },

    #[error("head values 1..={index} must decrease strictly for the head reduction")]
    HeadTies { index: usize },

    #[error("sweep bracket endpoint failed its proved inequality: {context}")]
    BracketFailure { context: String },

    #[error(
        "insufficient rank gap between {lo_rank} and {hi_rank} to host inserted value {value}"
    )]
    InsufficientGaps {
        value: f64,
        lo_rank: usize,
        hi_rank: usize,
    },

    #[error("geometric base {base} is below 2; the inserted tail would exceed its own values")]
    BaseTooSmall { base: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
