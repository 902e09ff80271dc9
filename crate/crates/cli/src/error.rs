use std::fmt;

/// Failure classes with distinct process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent input (exit code 2).
    Config(String),
    /// The numerics failed on valid input (exit code 3).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// Prefixes the message with the pipeline stage it came from.
    pub(crate) fn context(self, stage: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{stage}: {m}")),
            CliError::Numeric(m) => CliError::Numeric(format!("{stage}: {m}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Numeric(m) => write!(f, "numeric: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<magnon_core::Error> for CliError {
    fn from(e: magnon_core::Error) -> Self {
        use magnon_core::Error as E;
        match e {
            E::InvalidParameter { .. } | E::Parse { .. } | E::Io(_) | E::TooManySpins { .. } | E::InvalidState(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
