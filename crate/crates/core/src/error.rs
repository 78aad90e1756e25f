use thiserror::Error;

use crate::spectrum::BranchSample;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical singularity: {0}")]
    NumericalSingularity(String),

    #[error("secular function vanishes on the contour near {0}")]
    RootOnContour(num_complex::Complex64),

    #[error("{count} roots inside the search box exceed max_count = {max}")]
    TooManyRoots { count: usize, max: usize },

    #[error("root isolation failed: {0}")]
    Isolation(String),

    #[error("Newton iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("continuation stalled at alpha = {alpha}")]
    ContinuationStall { alpha: f64, last: BranchSample },

    #[error("no exceptional point found: {0}")]
    NoExceptionalPoint(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("insufficient sampling resolution: {0}")]
    Resolution(String),

    #[error("no perfect-transmission energy inside the seed window [{lo}, {hi}]")]
    SeedNotFound { lo: f64, hi: f64 },

    #[error("dispersion tangency at alpha = {alpha}: 2*alpha - mu'(alpha) = {gap:e}")]
    Tangency { alpha: f64, gap: f64 },

    #[error("branch does not meet the shifted dispersion parabola: {0}")]
    NoIntersection(String),
}
