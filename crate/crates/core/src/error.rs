//! Error type shared by every module, with the process exit code each kind maps to.

use thiserror::Error;

/// Failure categories. The CLI maps them onto exit codes 2 (config), 3 (numeric)
/// and 4 (convergence).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("singular parameter: {0}")]
    SingularParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unstable drift: eigenvalue {re:+.6e}{im:+.6e}i has a positive real part")]
    UnstableDrift { re: f64, im: f64 },

    #[error("ill-conditioned linear system: {0}")]
    Conditioning(String),

    #[error("degenerate valley: {0}")]
    DegenerateValley(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("polynomial fit failed: {0}")]
    FitFailure(String),

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::SingularParameter(_) => 2,
            Error::Convergence(_) | Error::FitFailure(_) => 4,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
