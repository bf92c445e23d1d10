use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}: malformed row {row}: {msg}")]
    MalformedRow { file: String, row: u64, msg: String },

    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: String, column: String },

    #[error("temperature channel empty")]
    TemperatureChannelEmpty,

    #[error("time ranges of the input sources do not overlap")]
    EmptyIntersection,

    #[error("event indices out of range for track {flight_id}")]
    EventOutOfRange { flight_id: String },

    #[error("insufficient history for minute {minute}")]
    InsufficientHistory { minute: i64 },

    #[error("minute {minute} is not usable: {reason}")]
    UnusableMinute { minute: i64, reason: &'static str },

    #[error("not enough eligible minutes: requested {requested}, eligible {eligible}")]
    NotEnoughEligible { requested: usize, eligible: usize },

    #[error("empty training set of go-around samples")]
    EmptyTrainingGa,

    #[error("class {class} has {count} samples, at least 2 are required")]
    TooFewSamples { class: u8, count: usize },

    #[error("covariance of class {class} is not positive definite after ridge {ridge}; increase ridge_lambda")]
    NotPositiveDefinite { class: u8, ridge: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input")]
    NonFinite,

    #[error("samples contain a single class")]
    SingleClass,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), err: source }
    }
}
