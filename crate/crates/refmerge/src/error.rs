use std::path::PathBuf;

use chrono::{DateTime, Utc};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("repository error: {0}")]
    Repository(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("credential error: {0}")]
    Credential(String),

    #[error("rate limited{}", .reset_at.map(|t| format!(", resets at {t}")).unwrap_or_default())]
    RateLimited { reset_at: Option<DateTime<Utc>> },

    #[error("transport error: {0}")]
    Transport(String),

    #[error(transparent)]
    Core(#[from] refmerge_core::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code: 2 configuration, 3 input or integrity, 4 repository.
    pub fn exit_code(&self) -> i32 {
        use refmerge_core::Error as C;
        match self {
            Error::Config(_) | Error::Credential(_) => 2,
            Error::Input(_) | Error::Integrity(_) | Error::Io { .. } => 3,
            Error::RateLimited { .. } | Error::Transport(_) => 3,
            Error::Repository(_) => 4,
            Error::Core(c) => match c {
                C::Config(_) => 2,
                C::UnknownCommit(_) => 4,
                C::InvalidSha(_) | C::Domain(_) | C::ContractViolation(_) | C::InvalidUtf8 { .. } => 3,
            },
            Error::Context { source, .. } => source.exit_code(),
        }
    }
}

impl From<git2::Error> for Error {
    fn from(e: git2::Error) -> Self {
        Error::Repository(e.message().to_string())
    }
}

pub trait ResultExt<T> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T>;
}

impl<T, E: Into<Error>> ResultExt<T> for std::result::Result<T, E> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| Error::Context { context: f(), source: Box::new(e.into()) })
    }
}
