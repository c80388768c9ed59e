use std::fmt;

/// Failure of one CLI run; each class maps to a fixed process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration. Nothing was computed.
    Config(String),
    Solver(cavity_eit::Error),
    /// A measured linewidth outside the calibrated span.
    OutOfRange(cavity_eit::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::OutOfRange(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid config: {m}"),
            CliError::Solver(e) => write!(f, "solver failure: {e}"),
            CliError::OutOfRange(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<cavity_eit::Error> for CliError {
    fn from(e: cavity_eit::Error) -> Self {
        match e {
            cavity_eit::Error::OutOfRange { .. } => CliError::OutOfRange(e),
            other => CliError::Solver(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
