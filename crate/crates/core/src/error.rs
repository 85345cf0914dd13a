use thiserror::Error;

use crate::tree::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {index} = {value} lies outside [{lower}, {upper}]")]
    OutOfDomain {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vertex {node}: {reason}")]
    Vertex { node: NodeId, reason: String },

    #[error("unknown target `{0}`")]
    UnknownTarget(String),

    #[error("{what} needs {requested} entries, cap is {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("singular system ({0}); use a positive ridge parameter")]
    Singular(String),

    #[error("non-finite activation in layer {layer}")]
    NonFinite { layer: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
