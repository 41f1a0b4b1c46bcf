use thiserror::Error;

use crate::prxml::DeweyCode;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed XML: {0}")]
    Xml(String),

    #[error("invalid document: {0}")]
    InvalidDocument(String),

    #[error("edge probability {prob} outside (0,1] at {node}")]
    ProbabilityOutOfRange { node: String, prob: f64 },

    #[error("MUX sum exceeds 1 ({sum}) at {node}")]
    MuxSumExceeded { node: String, sum: f64 },

    #[error("distributional node {0} has no children")]
    DistributionalLeaf(String),

    #[error("unknown Dewey code {0}")]
    UnknownNode(DeweyCode),

    #[error("world enumeration budget exceeded: {edges} optional edges > {budget}")]
    BudgetExceeded { edges: usize, budget: usize },

    #[error("corpus too large: {nodes} nodes > budget {budget}")]
    CorpusTooLarge { nodes: usize, budget: usize },

    #[error("query must contain between 1 and {max} distinct keywords (got {got})")]
    QuerySize { got: usize, max: usize },

    #[error("index format error: {0}")]
    IndexFormat(String),

    #[error("index does not match document (checksum {index:016x} vs {document:016x})")]
    IndexMismatch { index: u64, document: u64 },

    #[error("emission precondition violated: {0}")]
    Emission(String),

    #[error("invalid bench spec: {0}")]
    BenchSpec(String),

    #[error("empty report list")]
    EmptyReports,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
