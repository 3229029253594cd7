use std::fmt;

use meshshape::{MeshError, SolveError};

/// Failure of a command, carrying its exit code class.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input, output I/O (exit 1).
    Usage(String),
    /// The mesh is not a valid admissible configuration (exit 2).
    Inadmissible(String),
    /// Optimization or numerical check failed (exit 3).
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Inadmissible(_) => 2,
            CliError::Failed(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Inadmissible(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::Parse { .. }
            | MeshError::Io { .. }
            | MeshError::IndexOutOfRange { .. }
            | MeshError::SizeMismatch { .. }
            | MeshError::NonFinite(_) => CliError::Usage(e.to_string()),
            _ => CliError::Inadmissible(e.to_string()),
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Mesh(m) => m.into(),
            SolveError::InvalidParameter(m) => CliError::Usage(m),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(format!("writing csv: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o: {e}"))
    }
}
