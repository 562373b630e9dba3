use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("placement infeasible after {attempts} attempts: {what}")]
    PlacementInfeasible { what: String, attempts: usize },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("config error{}: {key}: {message}", line_suffix(*.line))]
    Config {
        key: String,
        line: usize,
        message: String,
    },

    #[error("unknown {kind} `{name}` (valid: {valid})")]
    UnknownName {
        kind: &'static str,
        name: String,
        valid: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn line_suffix(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" at line {line}")
    }
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors the CLI reports with the configuration exit code.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::UnknownName { .. } | Error::InvalidParameter(_)
        )
    }
}
