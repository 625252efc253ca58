//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed WAV file: {0}")]
    MalformedWav(String),

    #[error("multi-channel WAV not supported: {channels} channels")]
    MultiChannel { channels: u16 },

    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid frame: zero or negative energy")]
    InvalidFrame,

    #[error("numerically invalid autocorrelation: prediction error not positive at order {order}")]
    InvalidAutocorrelation { order: usize },

    #[error("no usable feature vectors")]
    EmptyFeatures,

    #[error("insufficient data: need at least {needed} vectors, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("cluster {cluster} is empty after repair")]
    EmptyCluster { cluster: usize },

    #[error("covariance matrix singular after regularization")]
    SingularModel,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("score undecidable: {0}")]
    UndecidableScore(String),

    #[error("SNR undefined for an all-zero signal")]
    UndefinedSnr,

    #[error("unstable pole set: radius {radius} not in (0, 1)")]
    UnstablePoles { radius: f64 },

    #[error("no enrolled speakers")]
    EmptyModelSet,

    #[error("model format version {found} not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("model schema violation: {0}")]
    SchemaViolation(String),

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("speaker {speaker} has no usable {split} data")]
    SpeakerWithoutData { speaker: String, split: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
