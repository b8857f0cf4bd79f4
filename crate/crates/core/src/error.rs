use thiserror::Error;

/// Errors raised by the analysis pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChaosError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operation requires the {required} model")]
    WrongModel { required: &'static str },

    #[error("coupling is critical (gamma = gamma_c); the quadratic form is degenerate")]
    CriticalCoupling,

    #[error("no superradiant minima: gamma = {gamma} does not exceed gamma_c = {gamma_c}")]
    NotSuperradiant { gamma: f64, gamma_c: f64 },

    #[error("energy {energy} lies outside the accessible range (minimum {minimum})")]
    EnergyOutOfRange { energy: f64, minimum: f64 },

    #[error("energy {energy} lies outside the tabulated range [{lo}, {hi}]")]
    OutsideDomain { energy: f64, lo: f64, hi: f64 },

    #[error("matrix dimension {dim} exceeds the configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose")]
    NotSymmetric { row: usize, col: usize },

    #[error("eigensolver failed to converge")]
    EigenFailure,

    #[error("integration step size underflow at t = {time}")]
    StepUnderflow { time: f64 },

    #[error("state lies on a coordinate singularity of the (phi, j_z) chart")]
    ChartSingularity,

    #[error("energy shell at epsilon = {epsilon} contains no seed points")]
    EmptyShell { epsilon: f64 },

    #[error("quadrature did not reach tolerance at epsilon = {epsilon} (error estimate {error:e})")]
    Quadrature { epsilon: f64, error: f64 },

    #[error("not enough states: need {needed}, have {available}")]
    InsufficientStates { needed: usize, available: usize },

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
}

pub type Result<T> = std::result::Result<T, ChaosError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> ChaosError {
    ChaosError::InvalidParameter { name, reason: reason.into() }
}
