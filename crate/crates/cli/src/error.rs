use std::fmt;

use crossmer::error::{DbError, FilterError, MatchError, PerfError, PipelineError, ReadGenError, SeqError, SimError};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    Usage(String),
    /// Unreadable or invalid input data (exit 2).
    Data(String),
    /// An internal consistency check failed (exit 3).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SeqError> for CliError {
    fn from(e: SeqError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DbError> for CliError {
    fn from(e: DbError) -> Self {
        match e {
            DbError::Config(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MatchError> for CliError {
    fn from(e: MatchError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ReadGenError> for CliError {
    fn from(e: ReadGenError) -> Self {
        match e {
            ReadGenError::TooShort { .. } => CliError::Data(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<PerfError> for CliError {
    fn from(e: PerfError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::SaCount(_) => CliError::Usage(e.to_string()),
            SimError::Length(_) => CliError::Data(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::TooShort { .. } => CliError::Data(e.to_string()),
            PipelineError::Config(m) => CliError::Usage(m),
            PipelineError::Sim(s) => s.into(),
            PipelineError::Match(m) => m.into(),
        }
    }
}
