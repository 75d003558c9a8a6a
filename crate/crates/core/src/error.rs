use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("(epsilon, delta) = (0,0) admits no finite-cost mechanism")]
    ZeroPrivacy,

    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: i64, value: f64 },

    #[error("probabilities sum to {sum} (deviation {deviation:e} exceeds 1e-12)")]
    NotNormalized { sum: f64, deviation: f64 },

    #[error("lambda = {0} is outside the open interval (0, 1)")]
    LambdaOutOfRange(f64),

    #[error("cost table has no entry for |k| = {0}")]
    TableOutOfRange(u64),

    #[error("invalid cost function: {0}")]
    InvalidCost(String),

    #[error("expected cost diverges: {0}")]
    DivergentCost(String),

    #[error("integrality violated: {what} = {value} is not a positive integer (nearest admissible delta: {nearest_delta})")]
    IntegralityViolated {
        what: String,
        value: f64,
        nearest_delta: f64,
    },

    #[error("epsilon must be positive")]
    EpsilonZero,

    #[error("support too large: {cells} cells and {shifts} shifts (limit 1000000 each)")]
    SupportTooLarge { cells: u64, shifts: u64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no feasible certificate: {0}")]
    NoFeasibleCertificate(String),

    #[error("negative certificate weight: {0}")]
    NegativeWeight(String),

    #[error("certificate regime does not match: {0}")]
    RegimeMismatch(String),

    #[error("truncation N = {n} is too small (need at least {required})")]
    TruncationTooSmall { n: u64, required: u64 },

    #[error("truncation N = {0} exceeds the limit of 100000")]
    TruncationTooLarge(u64),

    #[error("linear program is infeasible")]
    LpInfeasible,

    #[error("linear program is unbounded")]
    LpUnbounded,

    #[error("LP solver failure: {0}")]
    LpSolver(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}
