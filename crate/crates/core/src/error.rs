use std::path::PathBuf;

use thiserror::Error;

use crate::model::SensorPlacement;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quaternion is not unit norm (|q| = {norm})")]
    NonUnitQuaternion { norm: f64 },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("stream {placement} is not synchronized: {message}")]
    Sync {
        placement: SensorPlacement,
        message: String,
    },

    #[error("value out of sensor range: {0}")]
    OutOfRange(String),

    #[error("invalid recording: {0}")]
    InvalidRecording(String),

    #[error("calibration window is not stationary: {0}")]
    NotStationary(String),

    #[error("unsupported sample rate {rate} Hz (expected {expected} Hz)")]
    UnsupportedRate { rate: f64, expected: f64 },

    #[error("signal is empty")]
    EmptySignal,

    #[error("signal has zero variance")]
    ZeroVariance,

    #[error("no periodicity detected: {0}")]
    NoPeriodicity(String),

    #[error("signal too short: {len} samples, need at least {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("window of {window} samples exceeds signal length {len}")]
    WindowTooLong { window: usize, len: usize },

    #[error("feature {feature} on signal {signal}: {source}")]
    Feature {
        signal: String,
        feature: String,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate groups: {0}")]
    DegenerateGroups(String),

    #[error("zero spread: sigma1 + sigma2 = 0")]
    ZeroSpread,

    #[error("no feature is significant at alpha = {alpha}")]
    NoSignificantFeatures { alpha: f64 },

    #[error("within-class scatter is singular after regularization")]
    SingularScatter,

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid gait profile: {0}")]
    InvalidProfile(String),

    #[error("unsupported model version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn feature(signal: impl Into<String>, feature: impl Into<String>, e: Error) -> Self {
        Error::Feature {
            signal: signal.into(),
            feature: feature.into(),
            source: Box::new(e),
        }
    }

    /// True for failures of the numerical methods themselves, as opposed to
    /// malformed or insufficient input data.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonUnitQuaternion { .. }
            | Error::SingularScatter
            | Error::ZeroSpread
            | Error::ZeroVariance
            | Error::NoSignificantFeatures { .. } => true,
            Error::Feature { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
