use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit code for invalid arguments or inputs.
pub const EXIT_USAGE: u8 = 2;
/// Process exit code for file-system and format failures.
pub const EXIT_IO: u8 = 3;
/// Process exit code for numerical failures.
pub const EXIT_NUMERIC: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: file not found", path.display())]
    NotFound { path: PathBuf },
    #[error("{}: unsupported WAV format: {detail}", path.display())]
    Unsupported { path: PathBuf, detail: String },
    #[error("{}: malformed WAV: {detail}", path.display())]
    Malformed { path: PathBuf, detail: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot write an empty signal")]
    EmptySignal,
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] binmask_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        let path = path.into();
        if source.kind() == io::ErrorKind::NotFound {
            Error::NotFound { path }
        } else {
            Error::Io { path, source }
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Error::NotFound { .. } | Error::Unsupported { .. } | Error::Malformed { .. } | Error::Io { .. } => EXIT_IO,
            Error::Core(e) if e.is_numeric() => EXIT_NUMERIC,
            Error::EmptySignal | Error::Usage(_) | Error::Core(_) => EXIT_USAGE,
        }
    }
}
