use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("crossover probability {0} outside the open interval (0, 0.5)")]
    InvalidCrossover(f64),

    #[error("time-sharing coefficient {0} outside [0, 0.5]")]
    InvalidTimeSharing(f64),

    #[error("rate {0} outside [0, 1]")]
    InvalidRate(f64),

    #[error("parameters out of order: expected p1 < p2, got p1 = {p1}, p2 = {p2}")]
    Ordering { p1: f64, p2: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("root solver failed to converge: {0}")]
    Convergence(String),

    #[error("scenario validation error: {0}")]
    Validation(String),

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
