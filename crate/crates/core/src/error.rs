use thiserror::Error;

/// Errors shared by every structure in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("position {pos} out of range for length {len}")]
    OutOfRange { pos: usize, len: usize },
    #[error("invalid range [{start}, {end}] for length {len}")]
    InvalidRange { start: usize, end: usize, len: usize },
    #[error("zero budget exhausted (budget {budget})")]
    ZeroBudget { budget: usize },
    #[error("symbol {0} outside the alphabet")]
    InvalidSymbol(u32),
    #[error("document {0} already present")]
    DuplicateDocument(u64),
    #[error("document {0} unknown or already deleted")]
    UnknownDocument(u64),
    #[error("counting support was not enabled at construction")]
    CountingDisabled,
    #[error("pair ({0}, {1}) already related")]
    PairExists(u32, u32),
    #[error("pair ({0}, {1}) not related")]
    PairMissing(u32, u32),
    #[error("pattern must be non-empty")]
    EmptyPattern,
    #[error("documents must contain at least one symbol")]
    EmptyDocument,
    #[error("snapshot corrupt: {0}")]
    Corrupt(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
