use thiserror::Error;

/// Path from the root of a term to an offending node, as child indices.
pub type NodePath = Vec<usize>;

fn render_path(path: &[usize]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("unknown operation symbol `{symbol}` at node {}", render_path(path))]
    UnknownSymbol { symbol: String, path: NodePath },

    #[error(
        "variable x{index} is not covered by the assignment at node {}",
        render_path(path)
    )]
    UnassignedVariable { index: usize, path: NodePath },

    #[error(
        "arity mismatch for `{symbol}` at node {}: declared {declared}, applied to {applied}",
        render_path(path)
    )]
    ArityMismatch {
        symbol: String,
        declared: usize,
        applied: usize,
        path: NodePath,
    },

    #[error("element {element} out of range for universe of size {size}")]
    ElementOutOfRange { element: usize, size: usize },

    #[error("size mismatch: relation over {relation} elements, algebra has {algebra}")]
    SizeMismatch { relation: usize, algebra: usize },

    #[error("empty subuniverse undefined: seed is empty and the algebra has no constants")]
    EmptySubuniverse,

    #[error("resource cap exceeded while {what}: needed {needed}, cap {cap}")]
    ResourceCap {
        what: String,
        needed: usize,
        cap: usize,
    },

    #[error("relation is not a congruence: operation `{symbol}` maps related tuples {lhs:?} ~ {rhs:?} to unrelated values")]
    NotACongruence {
        symbol: String,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("relation is not saturated: ({a},{b}) related but ({c},{d}) is not")]
    NotSaturated {
        a: usize,
        b: usize,
        c: usize,
        d: usize,
    },

    #[error("not a partition: {0}")]
    InvalidPartition(String),

    #[error("invalid {kind}: {detail}")]
    InvalidRelation { kind: String, detail: String },

    #[error("hypothesis `{name}` failed: {detail}")]
    HypothesisFailed { name: String, detail: String },

    #[error("construction degenerated at stage `{stage}`: {detail}")]
    Degenerate { stage: String, detail: String },

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
}

impl Error {
    pub fn hypothesis(name: &str, detail: impl Into<String>) -> Self {
        Error::HypothesisFailed {
            name: name.to_string(),
            detail: detail.into(),
        }
    }

    /// Resource exhaustion maps to an "inconclusive" outcome rather than a failure.
    pub fn is_resource_cap(&self) -> bool {
        matches!(self, Error::ResourceCap { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
