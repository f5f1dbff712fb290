use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value {value} outside the domain [0, 1] ({context})")]
    Domain { value: f64, context: &'static str },

    #[error("degenerate knots: {0}")]
    DegenerateKnots(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("need at least {needed} positively weighted rows, found {found}")]
    InsufficientRows { needed: usize, found: usize },

    #[error("no usable fit along the lambda path: {0}")]
    DegeneratePath(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
