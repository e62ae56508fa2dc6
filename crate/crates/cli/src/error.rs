use std::fmt;
use std::path::Path;

use tiledcsl::analyzer::AnalyzerError;
use tiledcsl::{FormatError, MatrixError, SpmmError};

/// A failed command, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Oracle or schedule check failed.
    Check(String),
    /// Bad flags, values or incompatible dimensions.
    Usage(String),
    /// Unreadable, unwritable or malformed files.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<MatrixError> for CliError {
    fn from(e: MatrixError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<AnalyzerError> for CliError {
    fn from(e: AnalyzerError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SpmmError> for CliError {
    fn from(e: SpmmError) -> Self {
        match e {
            SpmmError::Tcsl(e) => CliError::Io(format!("invalid tiled-CSL data: {e}")),
            other => CliError::Usage(format!("dimension mismatch: {other}")),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Io(e.to_string())
    }
}
