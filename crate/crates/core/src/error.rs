use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite value {0}")]
    NonFiniteValue(f64),
    #[error("bad probability: {0}")]
    BadProbability(String),
    #[error("beta = {0} is outside (0, 1)")]
    BetaOutOfRange(f64),
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{family}: argument {arg} outside the domain")]
    DomainError { family: &'static str, arg: f64 },
    #[error("bad spec: {0}")]
    BadSpec(String),
    #[error("bad spectrum: {0}")]
    BadSpectrum(String),
    #[error("bad groups: {0}")]
    BadGroups(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("utility is not strictly increasing on the payout range")]
    NotMonotone,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("objective diverged at step {step} (value {value})")]
    NonFiniteObjective { step: usize, value: f64, trace: Vec<f64> },
    #[error("bad bracket [{lo}, {hi}]")]
    BadBracket { lo: f64, hi: f64 },
    #[error("non-finite function value")]
    NonFinite,
    #[error("bad sampler: {0}")]
    BadSampler(String),
}
