use thiserror::Error;

/// Errors produced by network construction, the numerical kernel and the
/// operator analysis built on top of them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("edge list is empty")]
    EmptyEdgeList,

    #[error("non-positive conductance {conductance} on edge ({x}, {y})")]
    NonPositiveConductance {
        x: String,
        y: String,
        conductance: f64,
    },

    #[error("edge ({x}, {y}) listed twice with different conductances {first} and {second}")]
    AsymmetricInput {
        x: String,
        y: String,
        first: f64,
        second: f64,
    },

    #[error("self-loop at vertex {0}")]
    SelfLoop(String),

    #[error("network is disconnected: vertex {0} is unreachable from the origin")]
    Disconnected(String),

    #[error("origin {0} does not appear in the edge list")]
    OriginMissing(String),

    #[error("unknown vertex {0}")]
    UnknownVertex(String),

    #[error("invalid generator size: {0}")]
    InvalidSize(String),

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("matrix is not Hermitian (relative defect {0:e})")]
    NotHermitian(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("eigen-solver failed to converge")]
    ConvergenceFailure,

    #[error("operands belong to different networks")]
    NetworkMismatch,

    #[error("origin {0} may not appear in a kernel vertex set")]
    OriginInF(String),

    #[error("vertex {0} listed more than once")]
    DuplicateVertex(String),

    #[error("vertex set must be nonempty")]
    EmptyVertexSet,

    #[error("exhaustion is not nested: set {index} does not contain its predecessor")]
    NotNested { index: usize },

    #[error("outer set does not enclose the inner set and its neighbors (missing {missing})")]
    InsufficientEnclosure { missing: String },

    #[error("{capped} of {samples} excursions hit the step cap; partial estimate {partial}")]
    CapHit {
        capped: u64,
        samples: u64,
        partial: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
