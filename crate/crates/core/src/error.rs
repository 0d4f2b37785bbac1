use thiserror::Error;

/// Errors raised by the physics and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error in {operation}: {reason}")]
    Domain {
        operation: &'static str,
        reason: String,
    },

    /// A structural invariant of a configuration type is violated.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// The incident energy exceeds the mirror potential, so the atom hits the surface.
    #[error("mirror overrun: incident energy {energy:e} J exceeds surface potential {u0:e} J")]
    MirrorOverrun { energy: f64, u0: f64 },

    /// The adaptive integrator could not make progress.
    #[error("integration failure: {0}")]
    IntegrationFailure(String),
}

impl Error {
    pub(crate) fn domain(operation: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            operation,
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Invalid { .. } => "invalid",
            Error::MirrorOverrun { .. } => "mirror_overrun",
            Error::IntegrationFailure(_) => "integration_failure",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
