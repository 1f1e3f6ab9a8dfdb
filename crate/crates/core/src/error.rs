use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpadError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown topic {0}")]
    UnknownTopic(u64),

    #[error("unknown content {0}")]
    UnknownContent(u64),

    #[error("publisher {publisher} is not registered at topic {topic}")]
    UnregisteredPublisher { publisher: u64, topic: u64 },

    #[error("subscriber group for content {0} is empty")]
    EmptyGroup(u64),

    #[error("degenerate capacity: part {part} has subscribers but zero capacity")]
    DegenerateCapacity { part: usize },

    #[error("invalid role index {index} (catalog has {len} roles)")]
    InvalidRole { index: usize, len: usize },

    #[error("vehicle {0} cannot report itself")]
    SelfReport(u64),

    #[error("invalid probability row: {0}")]
    InvalidPolicyRow(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cache error: {0}")]
    Cache(String),

    #[error("empty trace")]
    EmptyTrace,

    #[error("zero link rate")]
    ZeroRate,

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SpadError {
    fn from(e: std::io::Error) -> Self {
        SpadError::Io(e.to_string())
    }
}

impl From<csv::Error> for SpadError {
    fn from(e: csv::Error) -> Self {
        SpadError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SpadError>;
