use thiserror::Error;

/// Errors raised by the simulation and statistics pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("model `{0}` has an improper density and cannot be normalized")]
    NotNormalizable(&'static str),

    #[error("point dimension {found} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("|psi|^2 = {density:e} is below the node threshold {threshold:e}")]
    NodeProximity { density: f64, threshold: f64 },

    #[error("integrator exceeded {0} steps")]
    MaxStepsExceeded(u64),

    #[error("operation `{operation}` is not supported for model `{model}`")]
    UnsupportedModel {
        operation: &'static str,
        model: &'static str,
    },

    #[error("quadrature did not converge: last two estimates {previous:e} and {current:e}")]
    QuadratureNotConverged { previous: f64, current: f64 },

    #[error("ensemble has no completed trajectories")]
    EmptyEnsemble,

    #[error("time {0} is not on the ensemble sampling grid")]
    TimeNotOnGrid(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.to_string(),
        reason: reason.into(),
    }
}
