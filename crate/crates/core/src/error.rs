use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // Row numbers are 1-based data rows; the header is not counted.
    #[error("missing or misplaced column `{0}`")]
    MissingColumn(String),
    #[error("timestamp at row {row} does not increase")]
    NonMonotonicTimestamp { row: usize },
    #[error("irregular sampling at row {row}: expected step {expected_s} s, found {found_s} s")]
    IrregularStep {
        row: usize,
        expected_s: f64,
        found_s: f64,
    },
    #[error("cannot parse `{value}` in column `{column}` at row {row}")]
    UnparsableValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("non-finite value in column `{column}` at row {row}")]
    NonFiniteValue { row: usize, column: String },
    #[error("series needs at least 2 samples, got {len}")]
    SeriesTooShort { len: usize },

    #[error("invalid split `{0}`")]
    InvalidSplit(String),
    #[error("split leaves {train} training and {validation} validation samples; both need at least 2")]
    SplitTooSmall { train: usize, validation: usize },

    #[error("sum of temperature differences {sum} is too close to zero")]
    DegenerateTemperatureDifference { sum: f64 },
    #[error("series spans {span_hours} h but {required_hours} h are required")]
    SpanTooShort { span_hours: f64, required_hours: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("reference value is zero")]
    ZeroReference,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("parameter layouts are not congruent")]
    LayoutMismatch,
    #[error("unknown architecture `{0}`")]
    UnknownArchitecture(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("channel `{0}` is constant over the training segment")]
    ConstantChannel(&'static str),
    #[error("training loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("prediction became non-finite at sample {index}")]
    NonFinitePrediction { index: usize },

    #[error("invalid wall: {0}")]
    InvalidWall(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("unstable configuration: {0}")]
    UnstableConfiguration(String),

    #[error("config error: {0}")]
    Config(String),
    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
