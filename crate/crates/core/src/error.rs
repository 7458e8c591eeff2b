use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid batch: {0}")]
    InvalidBatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidShape(_) => "invalid-shape",
            Error::InvalidState(_) => "invalid-state",
            Error::InvalidBatch(_) => "invalid-batch",
            Error::InvalidInput(_) => "invalid-input",
            Error::InvalidLabel(_) => "invalid-label",
            Error::InvalidSpec(_) => "invalid-spec",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Numeric(_) => "numeric",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }
}
