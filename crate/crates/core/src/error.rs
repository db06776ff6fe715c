use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("{sites} sites exceeds the simulation cap of {cap}")]
    TooLarge { sites: usize, cap: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("term on sites {support:?} leaves region {region:?}")]
    SupportViolation {
        support: Vec<usize>,
        region: Vec<usize>,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("superoperator dimension {dim} exceeds the dense cap {cap}")]
    TooLargeForDense { dim: usize, cap: usize },
    #[error("region is empty")]
    EmptyRegion,
    #[error("adaptive step size underflow at t = {t}")]
    StepFailure { t: f64 },
    #[error("Liouvillian is not primitive (null space dimension {0})")]
    NonPrimitive(usize),
    #[error("steady state is singular (smallest eigenvalue {0:e})")]
    SingularSteadyState(f64),
    #[error("Liouvillian is not reversible (residual {0:e})")]
    NotReversible(f64),
    #[error("regime {regime} is invalid for alpha = {alpha}, d = {d}")]
    RegimeInvalid { regime: String, alpha: f64, d: usize },
    #[error("no decay in r: alpha - 3d = {0} <= 0")]
    NoDecay(f64),
    #[error("outside validity window: {0}")]
    OutsideValidity(String),
    #[error("regions overlap")]
    OverlapError,
    #[error("reduced state on {0} sites exceeds the dense cap")]
    TooLargeReduced(usize),
    #[error("linear algebra failure: {0}")]
    LinAlg(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
