use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("log-correlated field: clipped negative eigenvalue mass {clipped_fraction:.3e} exceeds 1% of total")]
    CirculantEmbedding { clipped_fraction: f64 },

    #[error("series of length {len} too short for embedding (p={p}, m={m}); need at least {required} samples")]
    SeriesTooShort {
        len: usize,
        p: usize,
        m: usize,
        required: usize,
    },

    #[error("lag {lag} out of range for series of length {len}")]
    LagOutOfRange { lag: usize, len: usize },

    #[error("empty admissible range: database has {states} states, tau_max = {tau_max}")]
    EmptyAdmissibleRange { states: usize, tau_max: usize },

    #[error("k = {k} exceeds admissible state count {admissible}")]
    TooManyNeighbors { k: usize, admissible: usize },

    #[error("tau = {tau} outside [1, {tau_max}]")]
    TauOutOfRange { tau: usize, tau_max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("ensemble needs at least 2 states, got {0}")]
    EnsembleTooSmall(usize),

    #[error("{dropped} of {total} analogue volumes are zero (limit 0.1%)")]
    TooManyZeroVolumes { dropped: usize, total: usize },

    #[error("degenerate distribution: standard deviation is zero")]
    DegenerateStd,

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("bad series file {path}: {reason}")]
    SeriesFormat { path: PathBuf, reason: String },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(line: usize, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: message.into(),
        }
    }

    pub fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
