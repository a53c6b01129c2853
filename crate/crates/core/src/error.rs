use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("requested {requested} components but only {achievable} are achievable")]
    Rank { requested: usize, achievable: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{phase} phase failed: {source}")]
    Phase { phase: &'static str, source: Box<Error> },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for failures caused by the numbers rather than by the caller.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Singular(_) | Error::Rank { .. } => true,
            Error::Phase { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub fn in_phase(self, phase: &'static str) -> Self {
        match self {
            Error::Phase { .. } => self,
            e => Error::Phase { phase, source: Box::new(e) },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Dimension { expected, actual });
    }
    Ok(())
}
