use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A truncated Fock expansion lost more norm than its budget allows.
    #[error("truncation error: norm deficit {deficit:e} exceeds budget {budget:e}")]
    Truncation { deficit: f64, budget: f64 },

    /// An input state violates a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The three-term eigenvector recurrence blew up; the trial value is not
    /// an eigenvalue.
    #[error("eigenvector recurrence diverged (relative residual {residual:e})")]
    Divergence { residual: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures caused by numerics (truncation, divergence) rather
    /// than by bad arguments.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Truncation { .. } | Error::Divergence { .. })
    }
}
