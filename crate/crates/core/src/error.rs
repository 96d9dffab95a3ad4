use thiserror::Error;

/// Errors raised by every stage of the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("structure error: {0}")]
    Structure(String),
    #[error("numerical failure in {stage}: {detail}")]
    Numerical { stage: &'static str, detail: String },
    #[error("no components found")]
    NoComponents,
    #[error("degenerate component: {0}")]
    Degenerate(String),
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }

    pub(crate) fn numerical(stage: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            stage,
            detail: detail.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical { .. } => 3,
            Error::NoComponents => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
