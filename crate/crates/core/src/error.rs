use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomoError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not a valid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("vectors are not orthonormal (max Gram residual {residual:e})")]
    NotOrthonormal { residual: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("invalid tensor-product structure: {0}")]
    InvalidSplit(String),

    #[error("rank {rank} is smaller than the numerical rank {numerical_rank} of the state")]
    RankTooSmall { rank: usize, numerical_rank: usize },

    #[error("rank R_e = {rank} out of range 1..={dim}")]
    InvalidRank { rank: usize, dim: usize },

    #[error("negative block size {0}")]
    NegativeBlock(f64),

    #[error("zero singular values inside the summation range at indices {indices:?}")]
    ZeroSingularValues { indices: Vec<usize> },

    #[error("K = {k} exceeds K_max = {k_max}")]
    TooManyConstraints { k: usize, k_max: usize },

    #[error("orthogonal factorized search failed after {attempts} restarts (best residual {best:e})")]
    SearchExhausted { attempts: usize, best: f64 },

    #[error("no complete set of mutually unbiased bases is implemented for dimension {0}")]
    UnsupportedDimension(usize),

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("trajectory never reaches d_B^2 = {threshold:e}")]
    Unreachable { threshold: f64 },

    #[error("unsupported true state: {0}")]
    UnsupportedState(String),

    #[error("no purity-adjustment coefficient in [0, 1] reaches purity {target}")]
    NoRoot { target: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, TomoError>;
