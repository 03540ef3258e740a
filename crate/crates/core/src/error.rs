use thiserror::Error;

use crate::jets::JetError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("point {0:?} is outside the chart domain")]
    OutsideDomain(Vec<f64>),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("metric is singular at {point:?} (condition number {condition:e})")]
    SingularMetric { point: Vec<f64>, condition: f64 },
    #[error("metric is not positive definite at {point:?} (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { point: Vec<f64>, min_eigenvalue: f64 },
    #[error("non-finite value while evaluating {0}")]
    NonFinite(&'static str),
    #[error("degenerate plane: spanning vectors are linearly dependent")]
    DegeneratePlane,
    #[error("gradient norm {norm:e} is below the floor {floor:e}; point too close to the base")]
    GradientBelowFloor { norm: f64, floor: f64 },
    #[error("tangent vector is parallel to the gradient")]
    ParallelToGradient,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("vector field vanishes on the sampling sphere (min norm {min_norm:e}); shrink the radius")]
    Inconclusive { min_norm: f64 },
    #[error("winding resolution failed after {refinements} refinements")]
    ResolutionExhausted { refinements: usize },
    #[error("zero is degenerate (|det| = {det:e})")]
    DegenerateZero { det: f64 },
    #[error(
        "direction search stalled at radius {radius:e}: best angle {angle:e} > {tol:e} \
         (counterexample candidate)"
    )]
    DirectionStalled { radius: f64, angle: f64, tol: f64 },
    #[error("baseline of the family is not a conformal Morse germ")]
    NonCmgBaseline,
}
