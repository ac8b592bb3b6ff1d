use thiserror::Error;

/// Errors raised by the simulation engines and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("sector dimension {dim} exceeds the cap of {cap}")]
    DimensionTooLarge { dim: u128, cap: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("eigendecomposition residual {residual:.3e} exceeds bound {bound:.3e}")]
    EigenAccuracy { residual: f64, bound: f64 },

    #[error("norm drift {drift:.3e} at period {period}")]
    NormDrift { period: usize, drift: f64 },

    #[error("operator does not commute with parity (deviation {deviation:.3e})")]
    NotParitySymmetric { deviation: f64 },

    #[error("sector dimension {dim} is too small for level statistics")]
    SectorTooSmall { dim: usize },

    #[error("series of length {len} is shorter than the required {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("fit window has {len} points, need at least {min}")]
    WindowTooShort { len: usize, min: usize },

    #[error("non-positive value in data that must be positive")]
    NonPositiveData,

    #[error("record has no zero crossing within its horizon")]
    NoCrossing,

    #[error("curves are not sampled on a common grid")]
    GridMismatch,

    #[error("Lyapunov separation {distance:.3e} out of range at period {period}")]
    Separation { period: usize, distance: f64 },

    #[error("invalid trajectory record: {0}")]
    InvalidRecord(String),
}

pub type Result<T> = std::result::Result<T, Error>;
