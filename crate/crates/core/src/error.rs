use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("index {index} out of range for basis of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("exact integer arithmetic overflowed: {0}")]
    Overflow(String),

    #[error("configuration exceeds the supported exact scale: {0}")]
    ScaleExceeded(String),

    #[error("full-space embedding needs {entries} entries, budget is {budget}")]
    BudgetExceeded { entries: u128, budget: u64 },

    #[error("state is not normalized: squared norm {0}")]
    NotNormalized(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("fidelity {0} lies outside [0, 1] beyond tolerance")]
    FidelityOutOfRange(f64),

    #[error("d = {0} must be prime")]
    NotPrime(usize),

    #[error("construction check failed: {0}")]
    ConstructionCheck(String),

    #[error("state is not a member of the basis family (closest overlap deficit {0})")]
    NotInFamily(f64),

    #[error("infeasible stage plan: {0}")]
    InfeasiblePlan(String),

    #[error("a reference pure state is required for fidelity reporting")]
    MissingReference,

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for malformed-input errors, as opposed to domain or scale errors.
    pub fn is_parse(&self) -> bool {
        matches!(self, Error::Parse(_))
    }
}
