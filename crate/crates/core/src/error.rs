use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma pole at z = {re} + {im}i")]
    GammaPole { re: f64, im: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("unsupported branch: {0}")]
    Unsupported(String),

    #[error("series did not converge after {terms} terms (last term {last:e})")]
    NonConvergence { terms: usize, last: f64 },

    #[error("degenerate expression: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Regime(_) | Error::Validation(_) => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::GammaPole { .. } => "gamma_pole",
            Error::Domain(_) => "domain",
            Error::Regime(_) => "regime",
            Error::Validation(_) => "validation",
            Error::Unsupported(_) => "unsupported",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Degenerate(_) => "degenerate",
            Error::Numerical(_) => "numerical",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
