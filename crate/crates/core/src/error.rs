use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("invalid color configuration: {0}")]
    Config(String),
    #[error("centroid of an empty pixel set")]
    EmptyPixelSet,
    #[error("degenerate line: both points coincide")]
    DegenerateLine,
    #[error("node id {0} is not in the graph")]
    InvalidNode(u32),
    #[error("source and sink are the same node")]
    SameEndpoints,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("flow is not a valid unit flow")]
    InvalidFlow,
    #[error("route needs at least two waypoints")]
    TooFewWaypoints,
    #[error("value out of range: {0}")]
    OutOfRange(String),
}
