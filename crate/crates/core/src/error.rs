use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma = {gamma} is at or beyond the exceptional point (|gamma| must be < 1)")]
    ExceptionalPoint { gamma: f64 },

    #[error("coupling J = {j} must be positive")]
    NonPositiveCoupling { j: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("drive segments are not contiguous in phi at segment {index}: expected {expected}, found {found}")]
    DiscontinuousDrive {
        index: usize,
        expected: f64,
        found: f64,
    },

    #[error("control path is malformed: {0}")]
    InvalidPath(String),

    #[error("quadrature did not converge: estimate {estimate} with error {error_estimate} after {subdivisions} subdivisions")]
    Quadrature {
        estimate: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    #[error("efficiency is undefined: absorbed heat vanishes (xi = 1)")]
    UndefinedEfficiency,

    #[error("closed loop violates state-function property: {quantity} = {value}")]
    StateFunctionViolation { quantity: &'static str, value: f64 },

    #[error("cannot remove gas: target entropy {target} is outside (0, {available})")]
    ExcessiveRemoval { target: f64, available: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
