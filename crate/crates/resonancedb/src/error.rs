use std::io;
use std::path::PathBuf;

use resonance_core::PatternId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Pattern(#[from] resonance_core::Error),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("store has dimension {found}, requested {requested}")]
    DimMismatch { requested: usize, found: usize },
    #[error("corrupt segment header in {path}: {reason}")]
    CorruptHeader { path: PathBuf, reason: String },
    #[error("pattern {0} already exists")]
    DuplicateId(PatternId),
    #[error("pattern {0} not found")]
    NotFound(PatternId),
    #[error("{0} does not contain a store")]
    NotAStore(PathBuf),
    #[error("store is empty")]
    EmptyStore,
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
}
