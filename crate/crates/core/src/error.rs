use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degree {degree} out of range for ambient dimension {n}")]
    DegreeOutOfRange { degree: usize, n: usize },

    #[error("invalid multi-index: {0}")]
    InvalidIndex(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("domain containment violated: {0}")]
    NotContained(String),

    #[error("inadmissible exponents p = {p}, q = {q}")]
    InadmissibleExponents { p: f64, q: f64 },

    #[error("missing parameter: {0}")]
    MissingParameter(&'static str),

    #[error("form vanishes on the sampled image: {0}")]
    VanishingForm(String),

    #[error("target point too close to the boundary image: distance {distance:.3e}, slack {slack:.3e}")]
    BoundaryTooClose { distance: f64, slack: f64 },

    #[error("isolation of the preimage not detected: {0}")]
    NotIsolated(String),

    #[error("suspected critical value: |J| = {jacobian:.3e} at a detected preimage")]
    CriticalValue { jacobian: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("negative density mass {negative:.3e} exceeds 1% of total {total:.3e}")]
    NegativeMass { negative: f64, total: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed QRGF data: {0}")]
    Format(String),
}
