use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("not enough data: {0}")]
    NotEnoughData(String),

    /// All photon bins of an orbit were empty.
    #[error("no signal in orbit frame (tracking loss)")]
    NoSignal,

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("singular Fisher information: {0}")]
    SingularInformation(String),

    #[error("segments overlap: {0}")]
    Overlap(String),

    #[error("schedule rejected: {constraint}")]
    ScheduleRejected { constraint: String },

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

/// Rejects NaN/inf values with the offending parameter name.
pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    ensure_finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be > 0, got {value}")))
    }
}
