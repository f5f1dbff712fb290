use thiserror::Error;

/// Failure classes of the command-line tool, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input and invalid options.
    #[error("{0}")]
    Parse(String),

    #[error("rank deficient problem: {0}")]
    Rank(String),

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Model(#[from] plaqr::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) => 2,
            Self::Rank(_) => 3,
            Self::NonConvergence(_) => 4,
            Self::Io(_) => 1,
            Self::Model(e) => match e {
                plaqr::Error::InsufficientRows { .. } | plaqr::Error::DegeneratePath(_) => 3,
                _ => 2,
            },
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Parse(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Parse(format!("json: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
