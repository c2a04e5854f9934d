use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Io,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: {what} has {got} channels, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("reference signal must be strictly positive: F = {value} at channel {channel}")]
    NonPositiveSignal { channel: usize, value: f64 },

    #[error("variance must be strictly positive: sigma^2 = {value} at channel {channel}")]
    NonPositiveVariance { channel: usize, value: f64 },

    #[error("non-finite value {value} in {what} at channel {channel}")]
    NonFinite {
        what: &'static str,
        channel: usize,
        value: f64,
    },

    #[error("degenerate noise draw: sample standard deviation is zero")]
    DegenerateDraw,

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("no positive root of the reduced score for alpha in [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("non-positive amplitude estimate alpha = {0}")]
    NonPositiveEstimate(f64),

    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged {
        what: &'static str,
        iterations: usize,
    },

    #[error("score residual {residual:e} at the located root exceeds the tolerance {bound:e}")]
    ScoreResidual { residual: f64, bound: f64 },

    #[error("empty input")]
    Empty,

    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter { .. } | Error::LengthMismatch { .. } => ErrorClass::Usage,
            Error::Parse { .. } | Error::Io(_) | Error::Json(_) => ErrorClass::Io,
            Error::Replicate { source, .. } => source.class(),
            _ => ErrorClass::Numerical,
        }
    }
}
