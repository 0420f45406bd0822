use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Arguments outside the domain of an operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A projection onto an outcome that carries no probability mass.
    #[error("impossible outcome: {0}")]
    ImpossibleOutcome(String),

    /// The dense validation routines refuse systems above their size bound.
    #[error("system too large for dense evaluation: {what} = {value} exceeds {limit}")]
    TooLarge {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    /// A witness whose denominator vanishes (or sits at numerical noise).
    #[error("witness undefined: {0}")]
    UndefinedWitness(String),

    /// A matrix expected to be Hermitian is not.
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    /// An iterative routine ran out of iterations.
    #[error("no convergence after {iterations} iterations (best value {best_value}, at {best_point:?})")]
    NotConverged {
        iterations: usize,
        best_value: f64,
        best_point: Vec<f64>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
