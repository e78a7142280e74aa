use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {message}", file.display())]
    Malformed {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}:{line}: embedding has {found} components, expected {expected}", file.display())]
    DimensionMismatch {
        file: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("conflicting counts for anchor `{anchor}` -> {entity}: {first} vs {second}")]
    ConflictingAnchor {
        anchor: String,
        entity: String,
        first: u64,
        second: u64,
    },

    #[error("conflicting frequencies for n-gram `{ngram}`: {first} vs {second}")]
    ConflictingNgram { ngram: String, first: u64, second: u64 },

    #[error("no anchor statistics for `{0}`")]
    UnknownAnchor(String),

    #[error("invalid entity id `{0}`")]
    InvalidEntityId(String),

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("empty query")]
    EmptyQuery,

    #[error("query has {terms} terms, the limit is {max}")]
    QueryTooLong { terms: usize, max: usize },

    #[error("empty surface form")]
    EmptySurface,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("snapshot {}: {message}", path.display())]
    Snapshot { path: PathBuf, message: String },

    #[error("record {id}: field `{field}`: {message}")]
    Schema {
        id: String,
        field: String,
        message: String,
    },

    #[error("unknown query id `{0}`")]
    UnknownQuery(String),

    #[error("nothing to evaluate")]
    EmptyRun,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Codec(#[from] bincode::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
