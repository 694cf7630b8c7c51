use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("random geometric graph still disconnected after {attempts} attempts")]
    ConnectivityFailure { attempts: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite value encountered at iteration {t}")]
    NonFinite { t: usize },
    #[error("need at least {needed} samples, got {found}")]
    InsufficientSamples { needed: usize, found: usize },
    #[error("coalition leaves no honest node")]
    InvalidCoalition,
    #[error("node {node} took the exchange branch at iteration {t}")]
    ConditionViolated { node: usize, t: usize },
    #[error("observation set is missing {0}")]
    Underdetermined(String),
}
