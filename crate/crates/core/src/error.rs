use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too small: n_x = {n_x}, need at least {min}")]
    GridTooSmall { n_x: usize, min: usize },

    #[error("step size {h} does not divide x_max = {x_max}")]
    NonDividingStep { h: f64, x_max: f64 },

    #[error("moment system is singular (pivot {pivot:e} at column {column})")]
    SingularMoments { column: usize, pivot: f64 },

    #[error("kill set has {kill} orders but {nodes} nodes were given (need nodes = kill + 1)")]
    KillSetMismatch { kill: usize, nodes: usize },

    #[error("moment residual {residual:e} exceeds tolerance")]
    MomentResidual { residual: f64 },

    #[error("scheme subtraction left weight {weight:e} on the farthest node")]
    CancellationFailure { weight: f64 },

    #[error("node {index} at offset {offset} lies outside the interior grid (last interior node {last})")]
    NodeOutsideGrid { index: usize, offset: f64, last: usize },

    #[error("negative discriminant {discriminant:e} in boundary-velocity quadratic")]
    NegativeDiscriminant { discriminant: f64 },

    #[error("non-finite input or state: {0}")]
    NonFinite(String),

    #[error("aborted after {rejects} consecutive rejected steps at tau = {tau}, k = {k:e}")]
    MaxRejects { rejects: usize, tau: f64, k: f64 },

    #[error("risk-neutral probability {q} outside (0, 1)")]
    InvalidProbability { q: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for errors caused by the configuration rather than by the solve.
    pub fn is_config(&self) -> bool {
        !matches!(
            self,
            Error::NegativeDiscriminant { .. } | Error::NonFinite(_) | Error::MaxRejects { .. }
        )
    }
}
