use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("series diverges at exponent {exponent} (convergence abscissa {abscissa})")]
    Divergent { exponent: f64, abscissa: f64 },

    #[error("no finite solution: {0}")]
    NoSolution(String),

    #[error("no finite beta: {0}")]
    NoFiniteBeta(String),

    #[error("enumeration budget of {budget} nodes exceeded with retained mass {retained_mass}")]
    Budget { budget: usize, retained_mass: f64 },

    #[error("word depth budget of {0} letters exceeded")]
    DepthBudget(usize),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_)
            | Error::DimensionMismatch { .. }
            | Error::Unsupported(_)
            | Error::Parse(_) => 2,
            Error::Divergent { .. } | Error::NoSolution(_) | Error::NoFiniteBeta(_) => 3,
            Error::Budget { .. } | Error::DepthBudget(_) => 4,
        }
    }
}
