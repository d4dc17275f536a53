use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate id at line {line}: {id}")]
    DuplicateId { line: usize, id: String },

    #[error("invalid token {token:?}: {reason}")]
    InvalidToken { token: String, reason: String },

    #[error("instance {instance}: position {position} {reason}")]
    InvalidPosition {
        instance: String,
        position: usize,
        reason: String,
    },

    #[error("unknown word: {0}")]
    UnknownWord(String),

    #[error("unknown concept: {0}")]
    UnknownConcept(String),

    #[error("invalid taxonomy: {0}")]
    InvalidTaxonomy(String),

    #[error("concept {0} has zero probability")]
    ZeroProbability(String),

    #[error("score {score} for pair ({a}, {b}) is outside [0, 1]")]
    ScoreOutOfRange { a: String, b: String, score: f64 },

    #[error("conflicting scores for pair ({a}, {b}): {first} vs {second}")]
    ConflictingScore {
        a: String,
        b: String,
        first: f64,
        second: f64,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sequence length {len} exceeds bound {bound}")]
    SequenceTooLong { len: usize, bound: usize },

    #[error("non-positive self-kernel {value} for instance {id}")]
    NonPositiveDiagonal { id: String, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}
