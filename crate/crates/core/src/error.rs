use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown sensor `{0}`")]
    UnknownSensor(String),

    #[error("duplicate sensor `{0}`")]
    DuplicateSensor(String),

    #[error("sensor `{0}` has no valid readings")]
    EmptySensor(String),

    #[error("score series for `{first}` and `{second}` are not aligned")]
    Misaligned { first: String, second: String },

    #[error("non-finite loss during training: {0}")]
    NonFinite(String),
}
