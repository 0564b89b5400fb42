use alloc::string::String;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("tangled mesh: triangle {triangle} has signed area {area:e}")]
    TangledMesh { triangle: usize, area: f64 },
    #[error("mesh adaptation failed: {0}")]
    Adaptation(String),
    #[error("zero pivot at row {row} (|pivot| = {pivot:e})")]
    ZeroPivot { row: usize, pivot: f64 },
    #[error("step failed at t = {t}: {reason}; try a smaller time step")]
    StepFailure { t: f64, reason: String },
    #[error("no root in bracket: {0}")]
    NoRoot(String),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
