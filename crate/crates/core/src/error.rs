use thiserror::Error;

use crate::geometry::PointClass;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix shape {rows}x{cols} does not match {len} entries")]
    BadShape { rows: usize, cols: usize, len: usize },

    #[error("eigen-solver did not converge after {iterations} sweeps (off-diagonal {residual:e})")]
    EigenNoConvergence { iterations: usize, residual: f64 },

    #[error("complex eigenvalues could not be paired into conjugate classes (gap {gap:e})")]
    PairingFailure { gap: f64 },

    #[error("columns are numerically dependent at column {column} (pivot {pivot:e})")]
    RankDeficient { column: usize, pivot: f64 },

    #[error("matrix is singular (pivot {pivot:e})")]
    Singular { pivot: f64 },

    #[error("matrix is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("matrix does not preserve the Hermitian form (defect {defect:e})")]
    NotFormPreserving { defect: f64 },

    #[error("zero vector has no projective class")]
    ZeroVector,

    #[error("point is {class:?}, expected a negative (interior) point")]
    NotNegative { class: PointClass },

    #[error("cosh^2 argument {value} is below 1")]
    AcoshDomain { value: f64 },

    #[error("the point at infinity has no horospherical chart")]
    PointAtInfinity,

    #[error("operation requires the half-space model")]
    WrongModel,

    #[error("isometry class is indeterminate (spectral radius {spectral_radius}, gram condition {gram_condition:e})")]
    IndeterminateClass {
        spectral_radius: f64,
        gram_condition: f64,
    },

    #[error("isometry fixes the origin (displacement {displacement:e})")]
    FixesOrigin { displacement: f64 },

    #[error("isometry does not send the origin onto the upper vertical geodesic (offset {offset:e})")]
    NotVertical { offset: f64 },

    #[error("isometry does not fix the origin (displacement {displacement:e})")]
    NotFixingOrigin { displacement: f64 },

    #[error("no admissible denominator up to {q_max}")]
    DirichletExhausted { q_max: u64 },

    #[error("adaptive quadrature exceeded {cap} subdivisions")]
    QuadratureCap { cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
