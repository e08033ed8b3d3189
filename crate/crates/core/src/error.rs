use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is disconnected")]
    DisconnectedGraph,
    #[error("conductance on edge ({0}, {1}) must be positive and finite")]
    NonPositiveConductance(usize, usize),
    #[error("killing rate at vertex {0} must be nonnegative and finite")]
    NegativeKilling(usize),
    #[error("all killing rates are zero")]
    AllKillingZeroWithoutOverride,
    #[error("transition matrix is not strictly substochastic (spectral bound {0})")]
    NotSubstochastic(f64),
    #[error("edge ({0}, {1}) is invalid: {2}")]
    BadEdge(usize, usize, &'static str),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("linear system is singular or not positive definite")]
    SingularSystem,
    #[error("function is not excessive at vertex {0} ((P - I)h = {1})")]
    ExcessiveH(usize, f64),
    #[error("loop step ({0}, {1}) is not an edge")]
    NonAdjacentStep(usize, usize),
    #[error("empty loop")]
    EmptyLoop,
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("loop is not primitive")]
    NotPrimitive,
    #[error("input too large: {0}")]
    TooLarge(String),
    #[error("exact refinement sum needs at most 12 vertices, got {0}")]
    TooLargeForExactSum(usize),
    #[error("merge set must contain at least two blocks")]
    JTooSmall,
    #[error("closed edge ({0}, {1}) lies inside a block")]
    EdgeInsideBlock(usize, usize),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("graph has no killing")]
    NoKilling,
    #[error("sampling plan does not match the graph")]
    PlanMismatch,
    #[error("thinning requires identical conductances and pointwise larger killing")]
    IncompatibleThinning,
    #[error("bad interval partition: {0}")]
    BadIntervalPartition(String),
    #[error("alternating sum is numerically unstable (residual {0:e})")]
    UnstableSum(f64),
    #[error("deconvolution produced negative mass {1:e} at n = {0}")]
    NegativeMass(usize, f64),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("no sign change in bracket: {0}")]
    NoSignChange(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("two evaluations disagree for {what}: {lhs} vs {rhs}")]
    Inconsistent { what: &'static str, lhs: f64, rhs: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
