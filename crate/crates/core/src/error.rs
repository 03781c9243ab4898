use thiserror::Error;

use crate::trace::Unit;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("degenerate geometry: lateral offset and range are both zero")]
    DegenerateGeometry,

    #[error("incidence angle {incidence_rad} rad is outside the source half-power angle {half_angle_rad} rad")]
    OutOfFieldOfView { incidence_rad: f64, half_angle_rad: f64 },

    #[error("received power has no interior peak for gamma = {gamma} (must be > 0)")]
    UndefinedPeak { gamma: f64 },

    #[error("negative voltage {0} V")]
    NegativeVoltage(f64),

    #[error("voltage {0} V is not positive; dB value undefined")]
    NonPositiveVoltage(f64),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("timestamps are not strictly increasing and uniform at sample {index}")]
    NonUniformTimestamps { index: usize },

    #[error("unit mismatch: expected {expected}, found {found}")]
    UnitMismatch { expected: Unit, found: Unit },

    #[error("trace too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("empty trace")]
    EmptyTrace,

    #[error("invalid smoothing window {window} for trace of {len} samples (must be odd and 1 <= window <= len)")]
    InvalidWindow { window: usize, len: usize },

    #[error("all samples dropped ({behind} behind the detector, {degenerate} degenerate)")]
    AllSamplesDropped { behind: usize, degenerate: usize },

    #[error("insufficient points for fit: {available} available, {needed} required")]
    InsufficientPoints { needed: usize, available: usize },

    #[error("degenerate design: all distances are equal")]
    DegenerateDesign,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("profile file: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
