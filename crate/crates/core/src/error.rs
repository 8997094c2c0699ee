use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A size, count, or scalar argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The operation requires a connected graph.
    #[error("graph is disconnected")]
    Disconnected,

    /// Random geometric graph generation kept producing disconnected samples.
    #[error("graph generation failed after {attempts} attempts (n = {n})")]
    GenerationFailure { n: usize, attempts: u32 },

    /// A matrix handed to the symmetric eigensolver is not symmetric.
    #[error("matrix is not symmetric (max |a_ij - a_ji| = {max_asymmetry:.3e})")]
    NotSymmetric { max_asymmetry: f64 },

    /// Predictor parameters make the requested formula 0/0.
    #[error("degenerate predictor parameters: {0}")]
    DegenerateParameters(String),

    /// An eigenvalue argument is outside the domain a formula is defined on.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// alpha lies outside the stability range [0, -1/theta1).
    #[error("alpha = {alpha} outside stability range [0, {bound})")]
    Instability { alpha: f64, bound: f64 },

    /// An iterate shrank below the precision guard before renormalization.
    #[error("vector underflow before normalization (max |entry| = {max_abs:.3e}); use a smaller normalization period")]
    PrecisionLoss { max_abs: f64 },

    /// A constructed or supplied matrix violates a contract the caller relies on.
    #[error("weight matrix violates {condition} (slack {slack:.3e})")]
    ConditionViolation { condition: &'static str, slack: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
