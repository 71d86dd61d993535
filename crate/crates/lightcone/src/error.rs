//! Crate-level error type aggregating every subsystem's failures.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Spacetime(#[from] crate::spacetime::SpacetimeError),
    #[error(transparent)]
    Network(#[from] crate::network::NetworkError),
    #[error(transparent)]
    Quote(#[from] crate::quotes::QuoteError),
    #[error(transparent)]
    Sip(#[from] crate::sip::SipError),
    #[error(transparent)]
    Causal(#[from] crate::causal::CausalError),
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the failure is a physics precondition (e.g. asking for an
    /// order flip on a pair with absolute order) rather than bad input.
    pub fn is_physics_violation(&self) -> bool {
        matches!(
            self,
            Error::Spacetime(crate::spacetime::SpacetimeError::NotSpacelike { .. })
                | Error::Analysis(crate::analysis::AnalysisError::Spacetime(
                    crate::spacetime::SpacetimeError::NotSpacelike { .. }
                ))
        )
    }
}
