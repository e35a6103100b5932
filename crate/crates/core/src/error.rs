use crate::sha::Sha;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid sha {0:?}: expected 40 lowercase hex characters")]
    InvalidSha(String),

    #[error("unknown commit {0}")]
    UnknownCommit(Sha),

    #[error("{0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("input is not valid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },

    #[error("configuration error: {0}")]
    Config(String),
}
