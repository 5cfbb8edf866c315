use thiserror::Error;

use crate::cot::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("raw score {value} outside source range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("score {value} outside the representable range [0, 10)")]
    ScoreDomain { value: f64 },

    #[error("malformed score {input:?} at byte {offset}: {reason}")]
    Parse {
        input: String,
        offset: usize,
        reason: &'static str,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("unknown value {label:?} for attribute {field}")]
    UnknownLabel { field: String, label: String },

    #[error("missing attribute field {0}")]
    MissingField(String),

    #[error("no score found in response ({} diagnostics)", diagnostics.len())]
    Extraction { diagnostics: Vec<Diagnostic> },

    #[error("requested {requested} PLS components but only {achieved} could be extracted")]
    ComponentsExhausted { requested: usize, achieved: usize },

    #[error("{source_name}:{line}: {message}")]
    Record {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("template bank: {0}")]
    Template(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
