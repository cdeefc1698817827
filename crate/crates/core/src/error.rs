use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("grid too coarse: axis {axis} has {nodes} nodes, at least {min} required")]
    GridTooCoarse {
        axis: usize,
        nodes: usize,
        min: usize,
    },

    #[error("axis {axis} is unbounded; truncate the domain before building a grid")]
    UnboundedAxis { axis: usize },

    #[error("domain has no unbounded axis to truncate")]
    NothingToTruncate,

    #[error("harmonic confinement requires positive β (got {0})")]
    NonPositiveBeta(f64),

    #[error("tail tolerance {0} must lie in (0, 1e-2)")]
    InvalidTailTolerance(f64),

    #[error("null density")]
    NullDensity,

    #[error("field is not normalized (Σ w·u² = {0})")]
    NotNormalized(f64),

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("expansion requires nodeless v ({count} interior nodes with v ≤ 0)")]
    NodalReference { count: usize },

    #[error("invalid magnetic number: |m| = {m} exceeds l = {l}")]
    InvalidMagneticNumber { l: u32, m: u32 },

    #[error("degree out of supported range: {0} > 60")]
    HermiteDegree(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "eigensolver did not converge in {iterations} iterations (last residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("conjugate gradients stalled after {iterations} iterations (residual {residual:e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("virial identity requires harmonic confinement")]
    VirialRequiresHarmonic,

    #[error("target variance {target} outside attainable interval ({min}, {max})")]
    TargetOutOfRange { target: f64, min: f64, max: f64 },

    #[error("β bracket expansion failed: variance {reached} at β = {beta} has not crossed target {target}")]
    BracketExpansion {
        beta: f64,
        reached: f64,
        target: f64,
    },

    #[error("ground-state variance is not decreasing in β near β = {beta}")]
    NonMonotone { beta: f64 },

    #[error("projection onto the constraint set failed: {0}")]
    ProjectionFailed(String),

    #[error("step size underflow at iteration {iteration}")]
    StepUnderflow { iteration: usize },

    #[error("csv: {0}")]
    Csv(String),

    #[error("incomplete grid: {missing} of {expected} nodes missing")]
    IncompleteGrid { missing: usize, expected: usize },

    #[error("non-uniform spacing on axis {axis}: deviation {deviation:e} exceeds 1e-9")]
    NonUniformSpacing { axis: usize, deviation: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of an iterative method, as opposed to rejected input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::LinearSolve { .. }
                | Error::BracketExpansion { .. }
                | Error::NonMonotone { .. }
                | Error::ProjectionFailed(_)
                | Error::StepUnderflow { .. }
        )
    }
}
