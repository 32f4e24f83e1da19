use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("space mismatch: expected {expected}, found {found}")]
    SpaceMismatch { expected: String, found: String },

    #[error("vector has {found} coordinates but its space has dimension {dim}")]
    DimensionMismatch { dim: usize, found: usize },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("cannot retract the zero vector onto the unit sphere")]
    ZeroVector,

    #[error("unsupported exponent {exponent} for {operation}")]
    UnsupportedExponent {
        exponent: String,
        operation: &'static str,
    },

    #[error("{what}: size {size} exceeds the enumeration cap {cap}")]
    EnumerationCap {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("unsupported class: {0}")]
    UnsupportedClass(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),

    #[error("permutation requires equal domain spaces")]
    UnequalDomains,

    #[error("family cannot produce {requested} terms: {reason}")]
    FamilyHorizon { requested: usize, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown reproduction case `{0}`")]
    UnknownCase(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
