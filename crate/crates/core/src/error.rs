use thiserror::Error;

/// Errors produced by the simulation, discretization and transport layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("first return not reached within {cap} iterations (start {start})")]
    Truncation { cap: u64, start: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("coboundary series not decaying: last term norms {previous:.3e} then {last:.3e}")]
    Divergence { previous: f64, last: f64 },

    #[error("size error: {size} exceeds cap {cap}; {hint}")]
    Size {
        size: usize,
        cap: usize,
        hint: &'static str,
    },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Config(_) | Error::Io(_) => 1,
            Error::Truncation { .. }
            | Error::Numerical(_)
            | Error::Divergence { .. }
            | Error::Fit(_) => 2,
            Error::Size { .. } => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
