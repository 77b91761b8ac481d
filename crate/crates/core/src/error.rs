use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: supported dimensions are 1, 2, 3")]
    InvalidDimension(usize),

    #[error("invalid side length {0}: must be >= 2")]
    InvalidSideLength(usize),

    #[error("scale l = {l} violates l < n/2 for n = {n}")]
    ScaleTooLarge { l: usize, n: usize },

    #[error("scale l = {l} out of range: {reason}")]
    InvalidScale { l: usize, reason: String },

    #[error("state space too large: {sites} sites exceeds the cap of {cap}")]
    StateSpaceTooLarge { sites: usize, cap: usize },

    #[error("density value {value} at site {site} outside {lo}..={hi}")]
    DensityOutOfRange {
        site: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("time step {dt} violates the stability bound {bound}")]
    UnstableTimeStep { dt: f64, bound: f64 },

    #[error("backward solve requires s <= t, got s = {s}, t = {t}")]
    BadTimeWindow { s: f64, t: f64 },

    #[error("{0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
