use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("axis index out of range: {0}")]
    AxisOutOfRange(String),

    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("dangling reference: {0}")]
    DanglingReference(String),

    #[error("undefined dimension: the family is empty")]
    UndefinedDimension,

    /// An enumeration would exceed its configured budget. `lower_bound` carries
    /// the best value verified before giving up, when one exists.
    #[error("budget exceeded: {what}")]
    BudgetExceeded {
        what: String,
        lower_bound: Option<usize>,
    },

    #[error("anchor unrecoverable: {0}")]
    AnchorUnrecoverable(String),

    #[error("malformed batch split: {0}")]
    MalformedBatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn budget(what: impl Into<String>, lower_bound: Option<usize>) -> Self {
        Error::BudgetExceeded {
            what: what.into(),
            lower_bound,
        }
    }
}
