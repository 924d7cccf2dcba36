use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by ingestion, solvers, metrics and the optimizer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed header at byte {offset}: {reason}")]
    MalformedHeader { offset: u64, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in record {record} (column {column})")]
    NonFiniteValue { record: usize, column: usize },

    #[error("label {label} of record {record} is outside [0, {classes})")]
    LabelOutOfRange { record: usize, label: i64, classes: usize },

    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },

    #[error("row {row}, field {field}: cannot parse {text:?} as a number")]
    NonNumericField { row: usize, field: usize, text: String },

    #[error("row {row} has negative label {label}")]
    NegativeLabel { row: usize, label: i64 },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("numerical overflow in scaling-domain Sinkhorn (lambda = {lambda:?}); retry in log domain")]
    NumericalOverflow { lambda: f64 },

    #[error("brute-force OT limited to n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("non-finite gradient (lambda = {lambda:?} may be too small for this instance)")]
    NonFiniteGradient { lambda: f64 },

    #[error("optimization diverged at step {step}")]
    DivergenceDetected { step: usize },

    #[error("class {class} appears in the test set but has no training samples")]
    MissingClass { class: usize },

    #[error("cannot place {classes} centroids at separation {separation} in {dim} dimensions")]
    InfeasibleSeparation {
        classes: usize,
        dim: usize,
        separation: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Numerical failures (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalOverflow { .. } | Error::NonFiniteGradient { .. } | Error::DivergenceDetected { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
