use thiserror::Error;

/// Errors raised by the metric, divergence and witness machinery.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("budget exceeded: {what} needed more than {cap} vertices")]
    BudgetExceeded { what: String, cap: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no escaping ray: neither direction verified within horizon {horizon}")]
    NoEscapingRay { horizon: u64 },

    #[error("operation requires the regular Z base action")]
    WrongBase,

    #[error("unsupported parameters: {0}")]
    UnsupportedParams(String),

    #[error("domain gap: g cannot be evaluated at {0}")]
    DomainGap(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("construction invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn budget(what: impl Into<String>, cap: usize) -> Self {
        Error::BudgetExceeded { what: what.into(), cap }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
