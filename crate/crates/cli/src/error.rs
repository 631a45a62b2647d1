use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("file error: {0}")]
    File(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Other(_) => 1,
            Self::Config(_) => 2,
            Self::File(_) => 3,
            Self::Refused(_) => 4,
        }
    }

    /// Library errors raised while computing; oversized materializations are
    /// refusals, everything else is reported as is.
    pub fn compute(e: nonmarkov::Error) -> Self {
        match e {
            nonmarkov::Error::TooLarge { .. } => Self::Refused(e.to_string()),
            _ => Self::Other(e.to_string()),
        }
    }

    /// Library errors raised while setting up a model from the settings.
    pub fn model(e: nonmarkov::Error) -> Self {
        match e {
            nonmarkov::Error::TooLarge { .. } => Self::Refused(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }

    pub fn input(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Self::File(format!("{}: {e}", path.display()))
    }
}
