use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("jump rates must be strictly positive, found {0}")]
    NonPositiveRate(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("reaction polynomials violate a structural invariant: {0}")]
    Structure(String),

    #[error("degenerate root of F near {0}: only simple roots can be classified")]
    DegenerateRoot(f64),

    #[error("maximum principle breached at step {step} (t = {time}): {detail}")]
    InvariantBreach { step: usize, time: f64, detail: String },

    #[error("no convergence after {iterations} iterations: {detail}")]
    NoConvergence { iterations: usize, detail: String },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("mismatched discretizations: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
