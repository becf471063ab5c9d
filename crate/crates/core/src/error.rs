use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("insufficient points: {0}")]
    InsufficientPoints(String),

    #[error("unbounded cell")]
    UnboundedCell,

    #[error("unstabilized evaluation: {0}")]
    Unstabilized(String),

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("pilot run projects {projected:.2} hits at n = {n}; need at least {required}")]
    PilotInfeasible {
        n: f64,
        projected: f64,
        required: f64,
    },

    #[error("rare-event exhaustion after {attempts} attempts (best H = {best_h})")]
    Exhausted {
        attempts: u64,
        best_h: f64,
        best: Box<crate::geometry::PointConfig>,
    },

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
