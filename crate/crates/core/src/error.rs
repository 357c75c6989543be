use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("joint state count {states} exceeds the enumeration limit {limit}")]
    EnumerationLimitExceeded { states: u128, limit: usize },

    #[error("parent relation contains a cycle")]
    CyclicGraph,

    #[error("potential of clique {clique} has non-positive entry {value} at position {entry}")]
    NonPositivePotential {
        clique: usize,
        entry: usize,
        value: f64,
    },

    #[error("variable subset is empty")]
    EmptySubset,

    #[error("index {index} out of range for {len} variables")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("index {0} appears more than once")]
    DuplicateIndex(usize),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("distributions live on different variable spaces")]
    SpaceMismatch,

    #[error("expected dimension {expected}, found {found}")]
    WrongDimension { expected: usize, found: usize },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("parameter `{name}` = {value} outside its domain {domain}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("generator of {0} is not twice differentiable at 1")]
    NotTwiceDifferentiable(String),

    #[error("adaptive quadrature did not reach tolerance (estimated error {error:e})")]
    QuadratureNonConvergence { error: f64 },

    #[error("distributions are not two-sided close: {0}")]
    NotTwoSidedClose(String),

    #[error("transportation simplex exceeded {iterations} pivots")]
    SolverCycling { iterations: usize },

    #[error("support is not one-dimensional (embedding dimension {0})")]
    NotOneDimensional(usize),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is indefinite (eigenvalue {0:e})")]
    IndefiniteMatrix(f64),

    #[error("not a BFS ordering: {0}")]
    NotBfsOrdering(String),

    #[error("separator at step {step} does not separate processed from remaining nodes")]
    SeparationViolated { step: usize },

    #[error("node {0} has no neighborhood in the decomposition")]
    NodeNotPresent(usize),

    #[error("nodes {0} and {1} already share a neighborhood")]
    AlreadyContracted(usize, usize),

    #[error("decomposition has provenance {found}, expected {expected}")]
    ProvenanceMismatch {
        expected: &'static str,
        found: String,
    },

    #[error("a metric table is required for {0}")]
    MetricRequired(String),

    #[error("no published subadditivity coefficient for {0}")]
    UnsupportedMeasure(String),

    #[error("model structures differ: {0}")]
    StructureMismatch(String),

    #[error("unknown {0}")]
    UnknownKind(String),

    #[error("model file: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
