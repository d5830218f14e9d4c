use thiserror::Error;

/// Errors surfaced by solvers, simulators and quadrature routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Exact enumeration was requested above the enumeration cap.
    #[error("enumeration infeasible: {0}; use Monte Carlo instead")]
    EnumerationInfeasible(String),

    /// A simulation exceeded its step cap before absorbing.
    #[error("step cap of {cap} exceeded{}", replicate.map(|r| format!(" (replicate {r})")).unwrap_or_default())]
    StepCapExceeded { cap: u64, replicate: Option<u64> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
