use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A numeric argument lies outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation point coincides with a lattice point of the kernel.
    #[error("kernel singularity at ({0}, {1})")]
    Singularity(f64, f64),

    /// Evaluation point is closer to a singular set than the configured guard.
    #[error("point ({x}, {y}) is within {distance:e} of a singular set (guard {guard:e})")]
    Proximity {
        x: f64,
        y: f64,
        distance: f64,
        guard: f64,
    },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear system is singular: {0}")]
    Singular(String),

    /// Richardson extrapolation of offset samples did not settle.
    #[error("offset extrapolation diverged: {0}")]
    Extrapolation(String),

    #[error("least-squares fit is rank deficient: {0}")]
    RankDeficient(String),
}

pub type Result<T> = std::result::Result<T, Error>;
