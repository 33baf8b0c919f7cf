use thiserror::Error;

/// Failures of the dense kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry passed to {0}")]
    NonFinite(&'static str),
    #[error("{0} did not converge within the iteration cap")]
    NoConvergence(&'static str),
    #[error("singular system in {0}")]
    Singular(&'static str),
    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),
}

/// Failures of sparse operator construction, application and file I/O.
#[derive(Debug, Error)]
pub enum SparseError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid CSR structure: {0}")]
    InvalidStructure(String),
    #[error("matrix market: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArnoldiError {
    #[error("starting block is numerically rank deficient (sigma_min/sigma_max = {0:.3e})")]
    RankDeficientStart(f64),
    #[error("decomposition already broke down; it spans an invariant subspace")]
    AlreadyBrokenDown,
    #[error("basis capacity of {0} blocks exhausted")]
    CapacityExhausted(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompressionError {
    #[error("truncation tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("factor shapes disagree: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Failures of the restarted solvers.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("memory budget of {memmax} columns admits no iteration for residual rank {rank}")]
    BudgetTooSmall { memmax: usize, rank: usize },
    #[error(transparent)]
    Arnoldi(#[from] ArnoldiError),
    #[error(transparent)]
    Compression(#[from] CompressionError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Failures of the comparison solvers.
#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("operator is not positive definite (block CG curvature check failed)")]
    Indefinite,
    #[error(
        "inner solver stopped after {iterations} iterations at relative residual {residual:.3e}"
    )]
    InnerMaxIterations { iterations: usize, residual: f64 },
    #[error("basis would exceed {max_dim} columns at outer iteration {iteration} (residual {residual:.3e})")]
    MemoryExhausted {
        max_dim: usize,
        iteration: usize,
        residual: f64,
    },
    #[error("no convergence within {0} iterations")]
    MaxIterations(usize),
    #[error("loss of orthogonality: cheap residual {cheap:.3e} vs explicit {explicit:.3e}")]
    LossOfOrthogonality { cheap: f64, explicit: f64 },
    #[error("operator must be symmetric")]
    NotSymmetric,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Compression(#[from] CompressionError),
}
