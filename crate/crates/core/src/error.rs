use crate::relation::NodeId;

/// Errors raised by kernel construction, ingestion, and analysis.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("node label is empty after trimming whitespace")]
    EmptyLabel,

    #[error("node id {0:?} is out of range for a universe of {1} nodes")]
    NodeOutOfRange(NodeId, usize),

    #[error("duplicate edge ({from:?} -> {to:?}) inserted with conflicting weights {existing} vs {new}; aggregate before building")]
    DuplicateEdge {
        from: NodeId,
        to: NodeId,
        existing: f64,
        new: f64,
    },

    #[error("edge weight {value} on ({from:?} -> {to:?}) is outside (0, 1]")]
    InvalidWeight {
        from: NodeId,
        to: NodeId,
        value: f64,
    },

    #[error("node universes differ: kernel has {kernel} nodes, envelope has {envelope}")]
    NodeCountMismatch { kernel: usize, envelope: usize },

    #[error("duplicate node label {0:?} in node list")]
    DuplicateLabel(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("record is malformed: {0}")]
    InvalidRecord(String),

    #[error("threshold p0 = {0} must lie in [0, 1)")]
    InvalidThreshold(f64),

    #[error("target {target:?} lies outside the {n}x{n} board")]
    TargetOutsideBoard { n: u32, target: (u32, u32) },

    #[error("invalid policy parameters: {0}")]
    InvalidPolicy(String),

    #[error("transcript group (model={model}, state={state}) has {got} samples, expected {expected}")]
    TranscriptGroupSize {
        model: String,
        state: String,
        got: usize,
        expected: u32,
    },

    #[error("transcript stream mixes targets: saw both {first:?} and {second:?}")]
    MixedTargets { first: String, second: String },

    #[error("empty trajectory: a trajectory needs at least one node")]
    EmptyTrajectory,

    #[error("trajectory step ({from:?} -> {to:?}) has zero membership in the kernel")]
    BrokenTrajectory { from: NodeId, to: NodeId },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
