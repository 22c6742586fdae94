use std::fmt;

use nanosense_core::Error;

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or input data (exit 1).
    Config(String),
    /// The run itself failed (exit 2).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_)
            | Error::InvalidModel(_)
            | Error::NotEnoughData(_)
            | Error::SingularGeometry(_)
            | Error::Overlap(_)
            | Error::ScheduleRejected { .. }
            | Error::Parse { .. } => CliError::Config(e.to_string()),
            Error::NoSignal | Error::SingularInformation(_) | Error::NonConvergence(_) | Error::Io(_) => {
                CliError::Runtime(e.to_string())
            }
        }
    }
}

/// Attaches the input path to errors raised while reading it.
pub fn in_file(path: &std::path::Path, e: Error) -> CliError {
    match CliError::from(e) {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        CliError::Runtime(m) => CliError::Runtime(format!("{}: {m}", path.display())),
    }
}
