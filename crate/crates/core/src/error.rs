use std::path::PathBuf;

use thiserror::Error;

use crate::effects::EffectKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed WAV: {0}")]
    MalformedWav(String),

    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),

    #[error("I/O failure on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("ingest file {} rejected: {reason}", path.display())]
    IngestFormat { path: PathBuf, reason: String },

    #[error("clip too short: {len} samples, need at least {needed}")]
    ClipTooShort { len: usize, needed: usize },

    #[error("invalid audio: {0}")]
    InvalidAudio(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no loudness block survived gating")]
    GatedSilence,

    #[error("reference signal is all zeros")]
    ZeroReference,

    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),

    #[error("no oracle inverse exists for {0}")]
    UnsupportedOracle(EffectKind),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("removal backend for {kind} failed: {reason}")]
    BackendFailed { kind: EffectKind, reason: String },

    #[error("removal backend for {kind} returned {actual} samples, expected {expected}")]
    LengthChanged {
        kind: EffectKind,
        expected: usize,
        actual: usize,
    },

    #[error("oracle backend for {0} needs the applied effect parameters")]
    OracleParamsMissing(EffectKind),

    #[error("backend registry has no entry for {0}")]
    MissingBackend(EffectKind),

    #[error("unknown effect kind {0:?}")]
    UnknownKind(String),

    #[error("bad backend command: {0}")]
    BadCommand(String),

    #[error("orchestrator misconfigured: {0}")]
    ModeMisconfigured(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
