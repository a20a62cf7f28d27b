use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Domain(projband::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<projband::Error> for CliError {
    fn from(e: projband::Error) -> Self {
        match e {
            projband::Error::Parse { .. } => CliError::Parse(e.to_string()),
            projband::Error::Io(msg) => CliError::Usage(msg),
            other => CliError::Domain(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Domain(_) => 3,
        }
    }
}
