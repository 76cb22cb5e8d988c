use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("unsupported density kind for this operation: {0}")]
    Unsupported(String),
    #[error("quadrature did not converge: {0}")]
    Divergence(String),
    #[error("tail mass {mass:e} beyond cutoff {cutoff} exceeds {limit:e}")]
    TailMass { cutoff: f64, mass: f64, limit: f64 },
    #[error("support violation at x = {x}: reference vanishes where density is positive")]
    SupportViolation { x: f64 },
    #[error("infeasible constraints: {0}")]
    Infeasible(String),
    #[error("no convergence after {iterations} iterations: {reason}")]
    NonConvergence { iterations: usize, reason: String },
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("constraint repair failed: {0}")]
    ConstraintRepair(String),
    #[error("unsupported symmetry class: {0}")]
    UnsupportedClass(String),
    #[error("step size fell below floor {dt_min:e} at t = {time}")]
    StepFloor { time: f64, dt_min: f64 },
    #[error("time step {dt:e} exceeds stability bound {bound:e}")]
    Stability { dt: f64, bound: f64 },
    #[error("boundary flux {flux:e} exceeds leak tolerance")]
    BoundaryLeak { flux: f64 },
    #[error("{law} violated between t = {t_prev} and t = {t_next} (change {delta:e})")]
    Monotonicity { law: String, t_prev: f64, t_next: f64, delta: f64 },
    #[error("momentum-space boundary mass {mass:e} indicates aliasing")]
    Aliasing { mass: f64 },
    #[error("empty sample")]
    EmptySample,
    #[error("path {index}: {source}")]
    Path { index: usize, source: Box<Error> },
}

impl Error {
    /// True for errors caused by bad input rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Domain(_)
            | Error::InvalidParameter(_)
            | Error::Unsupported(_)
            | Error::Infeasible(_)
            | Error::UnsupportedClass(_)
            | Error::TailMass { .. }
            | Error::SupportViolation { .. }
            | Error::Stability { .. }
            | Error::EmptySample => true,
            Error::Path { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

