use thiserror::Error;

/// Errors raised by graph construction, spectral solvers, distance and
/// propagation kernels, and the file codecs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("isolated node {0}")]
    IsolatedNode(usize),

    #[error("edge ({u},{v}) endpoint out of range for n={n}")]
    NodeOutOfRange { u: usize, v: usize, n: usize },

    #[error("edge ({u},{v}) has invalid weight {w}")]
    InvalidWeight { u: usize, v: usize, w: f64 },

    #[error("duplicate edge ({u},{v}) with conflicting weights {w1} and {w2}")]
    ConflictingEdge {
        u: usize,
        v: usize,
        w1: f64,
        w2: f64,
    },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("n={n} exceeds the dense cap {cap}; use the truncated solver")]
    DenseCapExceeded { n: usize, cap: usize },

    #[error("eigensolver did not converge after {iterations} matvecs (worst residual {worst_residual:e})")]
    NoConvergence {
        iterations: usize,
        worst_residual: f64,
    },

    #[error("operator mismatch: {0}")]
    OperatorMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph is disconnected: {0}")]
    Disconnected(String),

    #[error("{0}")]
    Bipartite(String),

    #[error("non-finite value at node {node} in {term}")]
    NonFinite { node: usize, term: &'static str },

    #[error("class {0} has no training node")]
    MissingClass(usize),

    #[error("training diverged at epoch {epoch} (loss {loss}); try a smaller learning rate")]
    Divergence { epoch: usize, loss: f64 },

    #[error("generator failed: {0}")]
    Generator(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
