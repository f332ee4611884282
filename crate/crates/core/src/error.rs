use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid value: {0}")]
    Validation(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("n = {n} exceeds the capacity limit of {limit} events")]
    Capacity { n: usize, limit: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no Kolmogorov representation: {0}")]
    NoRepresentation(String),
    #[error("simplex made no progress after {iterations} pivots")]
    NumericalDegeneracy { iterations: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("degenerate parameters: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
