use thiserror::Error;

/// Errors raised by the exact finite-state machinery.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("state spaces differ: {0}")]
    SpaceMismatch(String),
    #[error("invalid rational literal {0:?}")]
    ParseRational(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("target assigns zero mass to state {0}")]
    ZeroTargetMass(String),
    #[error("P not weakly dominated by Q at ({x},{x_prime})")]
    NotDominated { x: String, x_prime: String },
    #[error("not a coupling: {0}")]
    NotACoupling(String),
    #[error("missing joint distribution for pair ({0},{1})")]
    MissingPair(String, String),
    #[error("negative mass in {display} at {location}")]
    NegativeMass { display: &'static str, location: String },
    #[error("acceptance conditions violated: {0}")]
    AcceptanceConditions(String),
    #[error("proposal kernel is lazy at state {0}; use the general construction")]
    LazyProposal(String),
    #[error("internal check failed: {0}")]
    Internal(String),
    /// Two independent maximality tests gave different answers.
    #[error("maximality routes disagree: {0}")]
    Disagreement(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
