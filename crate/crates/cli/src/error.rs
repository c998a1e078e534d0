use std::fmt;

/// A failure, split by exit code: bad input exits with 2, anything that goes
/// wrong while running exits with 3.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Runtime(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<jtsmc::Error> for CliError {
    fn from(e: jtsmc::Error) -> Self {
        use jtsmc::Error::*;
        match e {
            NotDecomposable
            | DimensionMismatch(_)
            | TooLarge { .. }
            | InvalidConfig(_)
            | NotPositiveDefinite(_)
            | Parse { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches a path to an I/O error while reading input.
pub(crate) fn read_err(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::validation(format!("{}: {e}", path.display()))
}

/// Attaches a path to an I/O error while writing output.
pub(crate) fn write_err(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::runtime(format!("{}: {e}", path.display()))
}
