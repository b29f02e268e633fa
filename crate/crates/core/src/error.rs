use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty interval [{low}, {high}]")]
    EmptyInterval { low: f64, high: f64 },

    #[error("bin index {index} out of range for {bins} bins")]
    BinOutOfRange { index: usize, bins: usize },

    #[error("invalid action space: {0}")]
    InvalidSpec(String),

    #[error("NaN in {0}")]
    NotANumber(&'static str),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("support mismatch: {0} atoms vs {1} atoms")]
    SupportMismatch(usize, usize),

    #[error("buffer underflow: {0}")]
    BufferUnderflow(&'static str),

    #[error("index {index} out of range for episode of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("no demonstrations to fit the action scaler")]
    NoDemos,

    #[error("no episodes")]
    NoEpisodes,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("checkpoint version mismatch: file has v{found}, this build reads v{expected}")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("corrupt checkpoint: {0}")]
    Checkpoint(String),

    #[error("unknown environment `{0}` (valid: needle_bandit, pointmass_reach, double_integrator)")]
    UnknownEnv(String),

    #[error("expert failed to produce {wanted} successful episodes in {attempts} attempts")]
    ExpertFailed { wanted: usize, attempts: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

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

    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
