use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertex index {0} out of range")]
    VertexIndex(usize),
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("vertex names must be non-empty")]
    EmptyName,
    #[error("{found} vertices exceeds the limit of {limit}")]
    TooManyVertices { found: usize, limit: usize },
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("edge {0} -> {1} would create a directed cycle")]
    Cycle(String, String),
    #[error("`{0}` and `{1}` are already adjacent")]
    Adjacent(String, String),
    #[error("no edge {0} -> {1}")]
    MissingEdge(String, String),
    #[error("`{0}` and `{1}` are not adjacent")]
    NotAdjacent(String, String),
    #[error("edge {0} -> {1} is not covered")]
    NotCovered(String, String),
    #[error("graphs are over different vertex sets")]
    VertexMismatch,
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("cannot standardize: residual variance of `{vertex}` would be {residual:.6}")]
    Standardize { vertex: String, residual: f64 },
    #[error("conditioning submatrix is numerically singular")]
    Singular,
    #[error("test not decidable: n = {n} is too small for a conditioning set of size {k}")]
    NotDecidable { n: usize, k: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("need {needed} isolated vertices, found {found}")]
    InsufficientIsolated { needed: usize, found: usize },
    #[error("model is not faithful at tolerance {tol:e}: {count} near-vanishing dependencies, first {first}")]
    Unfaithful { tol: f64, count: usize, first: String },
    #[error("invalid sample grid: {0}")]
    Grid(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
