use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch at subsystem {subsystem}: expected {expected}, found {found}")]
    SubsystemDimension {
        subsystem: usize,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("subsystem index {index} out of range for a layout with {len} subsystems")]
    SubsystemIndex { index: usize, len: usize },

    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("invalid keep set {keep:?}: must be a nonempty proper subset of 0..{len}")]
    KeepSet { keep: Vec<usize>, len: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("trace drift {drift:e} at t = {time} exceeds 1e-6 (step too large)")]
    TraceDrift { time: f64, drift: f64 },

    #[error("positivity violated at t = {time}: minimum eigenvalue {min_eigenvalue:e}")]
    Positivity { time: f64, min_eigenvalue: f64 },

    #[error("norm deviation {deviation:e} in a single step at t = {time} (dt too large)")]
    NormDeviation { time: f64, deviation: f64 },

    #[error("jump requested at t = {time} but the jump operator annihilates the state")]
    NullJump { time: f64 },

    #[error("battery spectrum has {levels} levels but the state has rank {rank}")]
    SpectrumTooShort { levels: usize, rank: usize },

    #[error("negative ergotropy {0:e} beyond round-off")]
    NegativeErgotropy(f64),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("trajectory {index} failed: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown figure id `{0}`")]
    UnknownFigure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
