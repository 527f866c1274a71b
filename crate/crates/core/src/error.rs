use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("distribution has no atoms")]
    EmptyAtoms,
    #[error("weight {index} is negative or not finite: {value}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights sum to {sum}, expected 1")]
    WeightSumMismatch { sum: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point variant mismatch: expected {expected}, found {found}")]
    VariantMismatch { expected: &'static str, found: &'static str },
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("zero vector has no dual achiever")]
    ZeroVector,
    #[error("coupling marginals do not match: {0}")]
    InvalidMarginals(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point outside the loss domain: {0}")]
    DomainError(String),
    #[error("exponent r = {r} is not supported by {family}")]
    UnsupportedExponent { family: &'static str, r: f64 },
    #[error("loss {family} is not cataloged with cost {cost}")]
    UnsupportedPairing { family: &'static str, cost: &'static str },
    #[error("{family} has no per-point certificate")]
    NoPerPointCertificate { family: &'static str },
    #[error("no witness found: {0}")]
    WitnessNotFound(String),
    #[error("epsilon {epsilon} outside (0, {limit})")]
    EpsilonOutOfRange { epsilon: f64, limit: f64 },
    #[error("grid does not contain atom {index}")]
    GridMissingAtoms { index: usize },
    #[error("atom {index} has no finite-cost grid point")]
    NoFiniteCostColumn { index: usize },
    #[error("transport budget is infeasible on this grid")]
    BudgetInfeasible,
    #[error("no finite-cost coupling exists")]
    InfeasibleTransport,
    #[error("alpha = {alpha} outside [0, 1 - 1e-6]")]
    AlphaOutOfRange { alpha: f64 },
    #[error("{family} is not in the convex catalog")]
    NonConvexFamily { family: &'static str },
    #[error("objective diverged at iteration {iteration}: {value}")]
    DivergenceDetected { iteration: usize, value: f64 },
}
