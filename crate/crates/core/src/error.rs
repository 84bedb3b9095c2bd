use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("height must be positive, got {0} cm")]
    NonPositiveHeight(f64),
    #[error("invalid demographics: {0}")]
    InvalidDemographics(String),
    #[error("unknown activity label index {0}")]
    UnknownIndex(usize),
    #[error("invalid tag reading: {0}")]
    InvalidReading(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("minute {minute} outside simulated range [0, {duration})")]
    OutOfRange { minute: u32, duration: u32 },
    #[error("insufficient samples: {what} has {found}, need {needed}")]
    InsufficientSamples {
        what: String,
        found: usize,
        needed: usize,
    },
    #[error("tag stream is empty")]
    EmptyStream,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("window {0} has no ground-truth label")]
    UnlabeledWindow(usize),
    #[error("history has {found} usable minutes, need {needed}")]
    IncompleteHistory { found: usize, needed: usize },
    #[error("history is empty")]
    EmptyHistory,
    #[error("need at least {needed} instances to split, got {found}")]
    TooFewInstances { found: usize, needed: usize },
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("unexpected header {found:?}, expected {expected:?}")]
    HeaderMismatch { found: String, expected: String },
    #[error("non-contiguous minutes: expected {expected}, found {found}")]
    NonContiguousMinutes { expected: i64, found: i64 },
    #[error("unknown patient {0:?}")]
    UnknownPatient(String),
    #[error("invalid patient id {0:?}")]
    InvalidPatientId(String),
    #[error("patient {0:?} is already registered")]
    DuplicatePatient(String),
    #[error("reading batch is empty")]
    EmptyBatch,
    #[error("{0} not available yet")]
    Unavailable(&'static str),
    #[error("bad range: from {from} > to {to}")]
    BadRange { from: usize, to: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("model format error: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
