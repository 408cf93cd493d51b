use thiserror::Error;

/// Failure states shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size {0} must be even and at least 8")]
    InvalidGrid(usize),

    #[error("field has a non-finite sample at index {index}")]
    InvalidField { index: usize },

    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids ({0} vs {1} nodes)")]
    GridMismatch(usize, usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite value in the right-hand side (t = {t:?})")]
    BlowupSuspected { t: Option<f64> },

    #[error("no real peakon amplitude for speed {c}: discriminant {discriminant} < 0")]
    NoRealPeakon { c: f64, discriminant: f64 },

    #[error("peakons {i} and {j} collided at t = {t}")]
    Collision { i: usize, j: usize, t: f64 },

    #[error("evaluation at t = {t} is at or beyond the pole at t = {pole}")]
    PoleExceeded { t: f64, pole: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
