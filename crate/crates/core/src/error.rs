use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("universe size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("element {element} outside universe 1..={n}")]
    ElementOutOfRange { element: usize, n: usize },

    #[error("identical sets")]
    IdenticalSets,

    #[error("cap too small for quantitative decoding (alpha = {0})")]
    CapTooSmall(u64),

    #[error("inadmissible selector parameters: {0}")]
    Inadmissible(String),

    #[error("instance too large for exhaustive oracle ({required} candidates, budget {budget})")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("dispersion check failed for {attempts} consecutive seeds starting at {first_seed}")]
    DispersionFailed { first_seed: u64, attempts: u32 },

    #[error("random code claims failed for {attempts} consecutive seeds starting at {first_seed}")]
    ClaimsFailed { first_seed: u64, attempts: u32 },

    #[error("feedback vector has length {got}, code has {expected} queries")]
    LengthMismatch { expected: usize, got: usize },

    #[error("inconsistent feedback: {0}")]
    InconsistentFeedback(String),

    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),

    #[error("cannot delete element {0}: not present")]
    AbsentElement(usize),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
