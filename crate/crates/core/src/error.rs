use thiserror::Error;

use crate::quantizer::Codebook;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    /// Iterative design ran out of iterations. Carries the last iterate.
    #[error("no convergence after {iterations} iterations (last movement {movement:e})")]
    Convergence {
        iterations: usize,
        movement: f64,
        last: Box<Codebook>,
    },

    #[error("linear algebra: {0}")]
    LinearAlgebra(String),

    #[error("config: {0}")]
    Config(String),

    #[error("construction bug: {0}")]
    Construction(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::Domain(_) => "domain",
            Error::NumericalDegeneracy(_) => "numerical-degeneracy",
            Error::Convergence { .. } => "convergence",
            Error::LinearAlgebra(_) => "linear-algebra",
            Error::Config(_) => "config",
            Error::Construction(_) => "construction",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
