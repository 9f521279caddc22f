use thiserror::Error;

/// Errors raised by discretization, assembly, solves and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NdrError {
    #[error("empty support")]
    EmptySupport,
    #[error("primitive {index} is not in closed upper half-plane")]
    NotInUpperHalfPlane { index: usize },
    #[error("primitive {index} touches the real axis tangentially")]
    TangentialRealContact { index: usize },
    #[error("primitive {index} is not usable here: {reason}")]
    WrongPrimitive { index: usize, reason: &'static str },
    #[error("invalid primitive {index}: {reason}")]
    InvalidPrimitive { index: usize, reason: String },
    #[error("cell too coarse: cell size {cell_size} >= region diameter {diameter}")]
    CellTooCoarse { cell_size: f64, diameter: f64 },
    #[error("invalid discretization parameter: {0}")]
    InvalidDiscretization(String),
    #[error("kernel singular on diagonal")]
    KernelSingular,
    #[error("point {re}+{im}i is outside the domain of {what}")]
    OutsideDomain { what: &'static str, re: f64, im: f64 },
    #[error("tabulated values can only be evaluated at quadrature nodes")]
    TabulatedNeedsNodes,
    #[error("negative sigma {value} at node {node}")]
    NegativeSigma { node: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("system matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("degenerate support")]
    DegenerateSupport,
    #[error("precondition violated at node {node}: {reason}")]
    Precondition { node: usize, reason: String },
    #[error("endpoint singularity")]
    EndpointSingularity,
    #[error("point is not on the circle of radius {rho}")]
    OffCircle { rho: f64 },
    #[error("invalid band system: {0}")]
    InvalidBands(String),
    #[error("branch/sign inconsistency: {0}")]
    BranchInconsistency(String),
    #[error("singular gap system")]
    SingularGapSystem,
    #[error("gap index {index} out of range 1..={count}")]
    GapIndex { index: usize, count: usize },
    #[error("point is not on a band: {0}")]
    NotOnBand(String),
    #[error("empty support")]
    EmptyEvaluation,
    #[error("matrix size {n} exceeds dense eigen limit {limit}; subsample the quadrature")]
    EigenLimit { n: usize, limit: usize },
    #[error("no analytic oracle for this problem")]
    NoOracle,
    #[error("quadrature did not reach tolerance {tol:e} (last change {change:e})")]
    QuadratureTolerance { tol: f64, change: f64 },
}

pub type Result<T> = std::result::Result<T, NdrError>;
