use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An [`OfdmConfig`](crate::OfdmConfig) or other parameter set broke one of its relations.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("frame index {index} out of range for {n_frames} frames")]
    FrameOutOfRange { index: usize, n_frames: usize },

    #[error("scatterer state list is empty")]
    EmptyStates,

    #[error("noise variance must be non-negative, got {0}")]
    NegativeVariance(f64),

    #[error("inverted {name} range: [{lo}, {hi}]")]
    InvertedRange { name: &'static str, lo: f64, hi: f64 },

    #[error("zero symbol at subcarrier {subcarrier}, frame {frame}")]
    ZeroSymbol { subcarrier: usize, frame: usize },

    #[error("zero channel estimate at subcarrier {subcarrier}, frame {frame}")]
    ZeroChannelEstimate { subcarrier: usize, frame: usize },

    #[error("slow-time series of {len} samples is shorter than the {window}-sample window")]
    SeriesTooShort { len: usize, window: usize },

    #[error("spectrogram is identically zero")]
    ZeroSpectrogram,

    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("record {record}: {source}")]
    Record {
        record: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Failures decoding an `MDSPEC1` record file.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic bytes {0:02x?}")]
    BadMagic(Vec<u8>),

    #[error("record dimensions {found_t}x{found_f}, expected {expected_t}x{expected_f}")]
    DimensionMismatch {
        expected_t: usize,
        expected_f: usize,
        found_t: usize,
        found_f: usize,
    },

    #[error("truncated record: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
