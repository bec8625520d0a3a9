use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("reflection at {range} m lies in front of the mirror (offset {mirror_offset} m)")]
    InsideMirrorOffset { range: f64, mirror_offset: f64 },

    #[error("expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("profile of {len} cells is too short for a CFAR window of {window} cells")]
    ProfileTooShort { len: usize, window: usize },

    #[error("no profiles to assemble")]
    EmptyScan,

    #[error("intensity map has no cells above the floor value")]
    NothingToSample,

    #[error("need {needed} candidate cells for mode centres, found {found}")]
    InsufficientCandidates { needed: usize, found: usize },

    #[error("all powers are zero in scope group {group}")]
    ZeroWeights { group: usize },

    #[error("weights in scope group {group} sum to {sum}, expected 1")]
    Unnormalized { group: usize, sum: f64 },

    #[error("empty input to {0}")]
    EmptyInput(&'static str),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

/// A single configuration constraint that does not hold.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Violation {
    pub field: &'static str,
    pub reason: String,
}

impl Violation {
    pub fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self { field, reason: reason.into() }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "`{}`: {}", self.field, self.reason)
    }
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::InvalidParameter { field: v.field, reason: v.reason }
    }
}

pub(crate) fn first_violation(v: Vec<Violation>) -> Result<()> {
    match v.into_iter().next() {
        Some(v) => Err(v.into()),
        None => Ok(()),
    }
}
