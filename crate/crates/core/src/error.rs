use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid edge ({src}, {dst}): {reason}")]
    InvalidEdge { src: usize, dst: usize, reason: String },

    #[error("duplicate edge ({src}, {dst})")]
    DuplicateEdge { src: usize, dst: usize },

    #[error("node index {index} out of range for {nodes} nodes")]
    NodeOutOfRange { index: usize, nodes: usize },

    #[error("node {node} has zero degree; {context}")]
    ZeroDegree { node: usize, context: String },

    #[error("graph shift kind `{kind}` requires an undirected graph")]
    DirectedUnsupported { kind: String },

    #[error("permutation is not a bijection of [0, {nodes})")]
    InvalidPermutation { nodes: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is numerically non-diagonalizable: reconstruction residual {residual:.3e} exceeds {tolerance:.3e}")]
    NonDiagonalizable { residual: f64, tolerance: f64 },

    #[error("dense eigensolver cap exceeded: n = {n} > cap = {cap}")]
    EigenCapExceeded { n: usize, cap: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("linear algebra backend error: {0}")]
    Linalg(String),

    #[error("operator cannot be matched: {0}")]
    MatchCondition(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("operator is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("filter is unstable: min |p(lambda)| = {min_abs_p:.3e} below margin {margin:.3e}")]
    UnstableFilter { min_abs_p: f64, margin: f64 },

    #[error("support violation: entry ({row}, {col}) lies outside the graph support")]
    SupportViolation { row: usize, col: usize },

    #[error("graph is not bipartite (odd cycle through node {witness})")]
    NotBipartite { witness: usize },

    #[error("pointwise synthesis system is singular at lambda = {lambda}")]
    SingularPointwiseSystem { lambda: f64 },

    #[error("graph is disconnected: eigenvalue 0 has multiplicity {multiplicity}")]
    Disconnected { multiplicity: usize },

    #[error("divergence detected at round {round}: {what}")]
    Divergence { round: usize, what: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn linalg<E: std::fmt::Display>(err: E) -> Self {
        Error::Linalg(err.to_string())
    }
}
