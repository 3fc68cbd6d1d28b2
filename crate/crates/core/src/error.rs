use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input lies outside the problem bounds at coordinate {index}")]
    OutOfBounds { index: usize },
    #[error("evaluation budget exhausted")]
    BudgetExhausted,
    #[error("invalid problem dimensions: {0}")]
    InvalidDimensions(String),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid weight vector: {0}")]
    InvalidWeight(String),
    #[error("perturbation parameter eta must lie in [0, 1), got {0}")]
    InvalidEta(f64),
    #[error("need at least two distinct training inputs")]
    InsufficientData,
    #[error("training covariance is singular even with maximal jitter")]
    SingularCovariance,
    #[error("standard deviation must be non-negative, got {0}")]
    NegativeStddev(f64),
    #[error("need at least {needed} points to triangulate, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("points are affinely dependent")]
    DegenerateConfiguration,
    #[error("triangulation supports at most 5 input dimensions, got {0}")]
    DimensionTooHigh(usize),
    #[error("preferred input is not a vertex of the triangulation")]
    VertexNotFound,
    #[error("ground truth supports only two objectives, got {0}")]
    UnsupportedObjectiveCount(usize),
    #[error("eval index {0} is not on the current front")]
    InvalidChoice(usize),
    #[error("operation not allowed in phase {0}")]
    WrongPhase(String),
    #[error("invalid configuration field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
}
