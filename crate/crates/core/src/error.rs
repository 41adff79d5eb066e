use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("no value for variable `{0}`")]
    MissingVariable(String),
    #[error("nonlinear term: {0}")]
    Nonlinear(String),
    #[error("equality atom `{0}` must be eliminated by substitution before cell enumeration")]
    EqualityInCell(String),
    #[error("variable `{0}` has no finite bound in that direction")]
    Unbounded(String),
    #[error("capacity exceeded: {what} (budget {budget})")]
    Capacity { what: &'static str, budget: usize },
    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),
    #[error("invalid problem: {0}")]
    Invalid(String),
}

impl Error {
    pub fn capacity(what: &'static str, budget: usize) -> Self {
        Error::Capacity { what, budget }
    }

    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity { .. })
    }
}
