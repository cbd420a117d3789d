use thiserror::Error;

/// Rejected decimal literal.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LiteralError {
    #[error("malformed numeric literal `{0}`")]
    Malformed(String),
    #[error("unbounded literal `{0}` has no canonical enclosure")]
    Unbounded(String),
}

/// Syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Literal(#[from] LiteralError),
    #[error("invalid interval bounds [{lo}, {hi}]")]
    InvalidBounds { lo: String, hi: String },
    #[error("canonical interval cannot be split further")]
    CannotSplit,
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("variable `{0}` occurs more than once; rewrite to single-occurrence form first")]
    RepeatedVariable(String),
    #[error("variable `{0}` must occur in exactly one constraint (found {1})")]
    NotSingleConstraint(String, usize),
    #[error("shrunk domain for `{0}` is not a proper subset of its current domain")]
    NotProperSubset(String),
    #[error("box has an unbounded domain for `{0}`")]
    UnboundedDomain(String),
    #[error("box has {found} domains, expected {expected}")]
    BoxArity { expected: usize, found: usize },
    #[error("epsilon must be positive and finite")]
    BadEpsilon,
    #[error("equivalence classes overlap on `{0}`")]
    OverlappingClasses(String),
    #[error("tolerance must be non-negative, rounds and budget positive")]
    BadConfig,
    #[error("resource budget exceeded")]
    BudgetExceeded,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
