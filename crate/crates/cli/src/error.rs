//! CLI failures and their exit codes.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use tdt_core::Error;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config values or environment overrides.
    Usage(String),
    Io { path: PathBuf, source: io::Error },
    /// Data that fails a check made by the CLI itself.
    Data(String),
    /// Errors from the library, classified by [`CliError::code`].
    Core(Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Data(_) => EXIT_DATA,
            CliError::Core(e) => match e.root() {
                Error::InvalidConfig(_)
                | Error::InvalidParams(_)
                | Error::InvalidWidth(_)
                | Error::InvalidPlan(_)
                | Error::UnknownCodecName(_)
                | Error::MissingProfile { .. }
                | Error::ProfileSyntax { .. }
                | Error::KTooLargeForData { .. } => EXIT_USAGE,
                _ => EXIT_DATA,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) => f.write_str(msg),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}
