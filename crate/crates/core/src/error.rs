use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// File does not match the expected layout (magic, version, length, schema).
    #[error("format error: {0}")]
    Format(String),

    /// Values are well-formed but violate a data invariant.
    #[error("data error: {0}")]
    Data(String),

    /// Caller supplied arguments that violate an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),

    /// A strategy failed inside a filtering round.
    #[error("strategy {strategy} (member {member}, batch {batch}) failed: {source}")]
    Strategy {
        strategy: String,
        member: usize,
        batch: usize,
        #[source]
        source: Box<Error>,
    },

    /// An AL cycle stage failed; `stage` names the step (train, filter, select, evaluate).
    #[error("cycle {cycle}, stage {stage}: {source}")]
    Cycle {
        cycle: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 usage/config, 3 data/format.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Format(_) | Error::Data(_) | Error::Io { .. } => 3,
            Error::Strategy { source, .. } | Error::Cycle { source, .. } => source.exit_code(),
        }
    }

    /// Innermost error after unwrapping strategy/cycle context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Strategy { source, .. } | Error::Cycle { source, .. } => source.root(),
            other => other,
        }
    }
}

macro_rules! usage {
    ($($arg:tt)*) => { $crate::error::Error::Usage(format!($($arg)*)) };
}
macro_rules! data_err {
    ($($arg:tt)*) => { $crate::error::Error::Data(format!($($arg)*)) };
}
macro_rules! format_err {
    ($($arg:tt)*) => { $crate::error::Error::Format(format!($($arg)*)) };
}
pub(crate) use {data_err, format_err, usage};
