//! Error types shared across the crate.

use alloc::string::String;
use thiserror::Error;

/// Construction-time validation failures for schedules, states, and configs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid noise schedule: {0}")]
    InvalidSchedule(String),
    #[error("state vector shape mismatch: shape expects {expected} entries, data has {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("state vector contains a non-finite entry at index {index}")]
    NonFiniteEntry { index: usize },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Score-field evaluation and training failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("dimension mismatch: score field expects {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("parameter shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    TrainingDiverged { epoch: usize },
    #[error("empty training set")]
    EmptyTrainingSet,
}

/// Failures raised by projection operators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("dimension mismatch: constraint expects {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("invalid bounds: lo > hi at index {index}")]
    InvalidBounds { index: usize },
    #[error("zero normal vector")]
    ZeroNormal,
    #[error("rank-deficient constraint matrix (pivot {pivot:e} at row {row})")]
    RankDeficient { row: usize, pivot: f64 },
    #[error("Dykstra iteration did not converge: residual {residual:e} after {iterations} cycles")]
    DykstraNonConvergence { residual: f64, iterations: usize },
    #[error("porosity target k={k} exceeds dimension {dim}")]
    CountExceedsDim { k: usize, dim: usize },
    #[error("target center ({row}, {col}) out of bounds for frame {frame}")]
    TargetOutOfBounds { frame: usize, row: i64, col: i64 },
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),
    #[error("trajectory solver did not converge: max clearance violation {max_violation:e}")]
    SolverNonConvergence { max_violation: f64 },
}

/// Failures raised while running a sampling chain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("invalid sampler config: {0}")]
    Config(String),
    #[error("non-finite score output at level t={t}, inner iteration i={i}")]
    NonFiniteScore { t: usize, i: usize },
    #[error("chain diverged (|x| = {max_abs:e} > 1e6) at level t={t}, inner iteration i={i}")]
    Divergence { t: usize, i: usize, max_abs: f64 },
    #[error("score error: {0}")]
    Score(#[from] ScoreError),
    #[error("projection error: {0}")]
    Projection(#[from] ProjectionError),
}

/// Failures in the theory verification harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("unsupported probe: {0}")]
    UnsupportedProbe(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("state generator exhausted: {accepted} of {requested} trial states satisfied the gradient-size criterion")]
    StateGeneratorExhausted { accepted: usize, requested: usize },
    #[error("sampler error during chain check: {0}")]
    Sampler(#[from] SamplerError),
    #[error("projection error: {0}")]
    Projection(#[from] ProjectionError),
}

/// Failures in batch metric computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("empty sample batch")]
    EmptyBatch,
    #[error("dimension mismatch between sample batches: {a} vs {b}")]
    DimMismatch { a: usize, b: usize },
    #[error("path needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("path length {len} is not a positive multiple of the point dimension {point_dim}")]
    RaggedPath { len: usize, point_dim: usize },
    #[error("tolerances must be ascending")]
    UnsortedTolerances,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("projection error: {0}")]
    Projection(#[from] ProjectionError),
}
