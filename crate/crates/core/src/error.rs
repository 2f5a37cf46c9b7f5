use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("pattern annihilated")]
    Annihilated,

    #[error("{}: malformed header: {reason}", path.display())]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("{}: dimension mismatch: {reason}", path.display())]
    DimensionMismatch { path: PathBuf, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("firefly population is empty")]
    EmptyPopulation,

    #[error("firefly population has no {0} flies")]
    MissingPolarity(&'static str),

    #[error("unstable Euler step: dt * (alpha*N + beta*max|T|) = {0} >= 1")]
    UnstableStep(f64),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// True for errors caused by unreadable or malformed input data.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::MalformedHeader { .. }
                | Error::DimensionMismatch { .. }
                | Error::Io { .. }
                | Error::Annihilated
                | Error::Shape(_)
        )
    }
}
