use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("not a density matrix: {0}")]
    NotAState(String),
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid instrument: {0}")]
    InvalidInstrument(String),
    #[error("invalid Markov kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid joint observable: {0}")]
    InvalidJointObservable(String),
    #[error("weight {0} outside [0, 1]")]
    WeightOutOfRange(f64),
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("oracle failed: {0}")]
    Oracle(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
