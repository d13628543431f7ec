use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("vocabulary index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),

    #[error("invalid label catalog: {0}")]
    InvalidCatalog(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid generator model: {0}")]
    InvalidModel(String),

    #[error("invalid prefix: {0}")]
    InvalidPrefix(String),

    #[error("enumeration needs {needed} evaluations, budget is {budget}")]
    EnumerationTooLarge { needed: u128, budget: u128 },

    #[error("cannot fit an estimator on an empty corpus")]
    EmptyCorpus,

    #[error("sequence of length {len} is too short for context floor {context_floor}")]
    ContextTooShort { len: usize, context_floor: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("threshold needs at least two values, got {0}")]
    DegenerateVector(usize),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
