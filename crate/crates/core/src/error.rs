use thiserror::Error;

/// Errors produced by parsing, joining and evaluating metric data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("no header")]
    NoHeader,

    #[error("line {line}: missing column: {column}")]
    MissingColumn { column: String, line: u64 },

    /// A malformed cell or row in a TSV input.
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: duplicate score for {key}")]
    DuplicateScore { line: u64, key: String },

    #[error("line {line}: mixed metric names in one file ({first} vs {other})")]
    MixedMetrics {
        line: u64,
        first: String,
        other: String,
    },

    #[error("no ratings")]
    NoRatings,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unknown metric: {0}")]
    UnknownMetric(String),

    #[error("unknown system: {0}")]
    UnknownSystem(String),

    #[error("coverage gap: {count} translations lack either a human or a metric score (first: {})", .sample.join(", "))]
    CoverageGap { count: usize, sample: Vec<String> },

    #[error("empty intersection between human scores and score tables")]
    EmptyIntersection,

    #[error("missing metric score for {0}")]
    MissingMetricScore(String),

    #[error("missing pair: {0}")]
    MissingPair(String),

    #[error("metric {0} is degenerate: precision is undefined at every candidate threshold")]
    Degenerate(String),

    #[error("correlation undefined for every segment group")]
    AllGroupsUndefined,

    #[error("length mismatch: {0} != {1}")]
    LengthMismatch(usize, usize),
}

impl Error {
    pub(crate) fn parse(line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by the environment rather than by the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
