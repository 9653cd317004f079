use std::fmt;

use mhcoupling::CoreError;
use mhsamplers::SamplerError;

/// Failure classes with stable exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid input: exit 2.
    Parse(String),
    /// A coupling does not have the required marginals: exit 3.
    Marginal(String),
    /// An internal check failed: exit 4.
    Internal(String),
    /// Two independent routes to the same verdict disagree: exit 5.
    Disagreement(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Marginal(_) => 3,
            CliError::Internal(_) => 4,
            CliError::Disagreement(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Marginal(m) => write!(f, "marginal violation: {m}"),
            CliError::Internal(m) => write!(f, "check failed: {m}"),
            CliError::Disagreement(m) => write!(f, "internal invariant breach: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::SpaceMismatch(_)
            | CoreError::ParseRational(_)
            | CoreError::InvalidDistribution(_)
            | CoreError::InvalidKernel(_)
            | CoreError::ZeroTargetMass(_)
            | CoreError::NotDominated { .. }
            | CoreError::MissingPair(..) => CliError::Parse(msg),
            CoreError::NotACoupling(_) => CliError::Marginal(msg),
            CoreError::NegativeMass { .. }
            | CoreError::AcceptanceConditions(_)
            | CoreError::LazyProposal(_)
            | CoreError::Internal(_) => CliError::Internal(msg),
            CoreError::Disagreement(_) => CliError::Disagreement(msg),
        }
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::Config(m) => CliError::Parse(m),
            SamplerError::MissingGradient => CliError::Parse(e.to_string()),
            SamplerError::Core(c) => c.into(),
            other => CliError::Internal(other.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_error_class() {
        let code = |e: CoreError| CliError::from(e).exit_code();
        assert_eq!(code(CoreError::ParseRational("x".into())), 2);
        assert_eq!(code(CoreError::NotACoupling("x".into())), 3);
        assert_eq!(code(CoreError::AcceptanceConditions("x".into())), 4);
        assert_eq!(code(CoreError::Disagreement("x".into())), 5);
        assert_eq!(CliError::from(SamplerError::Config("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(SamplerError::Core(CoreError::Internal("x".into()))).exit_code(), 4);
    }
}
