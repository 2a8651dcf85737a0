use std::fmt;
use std::path::Path;

use superdir::Error;

/// Failure of one command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag values (exit 1).
    Usage(String),
    /// Unreadable, malformed or inconsistent input files (exit 2).
    Data(String),
    /// The numbers themselves failed: singular matrices, rank loss (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    /// Classifies a core error raised while validating command-line values.
    pub fn usage(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }

    /// Classifies a core error raised while reading `path`.
    pub fn in_file(path: &Path, e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(format!("{}: {e}", path.display()))
        } else {
            CliError::Data(format!("{}: {e}", path.display()))
        }
    }
}

/// Errors from computations on already validated inputs.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
