use alloc::string::String;

/// Error type shared by all modules of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(&'static str),
    #[error("incompatible basis: {0}")]
    IncompatibleBasis(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("invalid orientation: axis is not a member of the <111> family")]
    InvalidOrientation,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("calibration failure: {0}")]
    CalibrationFailure(String),
    #[error("empty diagram: no active sites")]
    EmptyDiagram,
    #[error("out of range: {0}")]
    OutOfRange(&'static str),
    #[error("strain magnitude outside the linear-regime guard band")]
    NonlinearRegime,
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
    #[error("fit failure: {0}")]
    FitFailure(String),
    #[error("empty photon stream")]
    EmptyStream,
}

pub type Result<T> = core::result::Result<T, Error>;
