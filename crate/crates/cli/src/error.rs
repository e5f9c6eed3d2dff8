use thiserror::Error;

/// CLI failures, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration violates a precondition; nothing was run.
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// A rate verdict came out negative.
    #[error("verdict failed: {0}")]
    Verdict(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Io { .. } => 1,
            CliError::Verdict(_) => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

/// Library errors raised while running are runtime failures.
impl From<galerkin_flm::Error> for CliError {
    fn from(e: galerkin_flm::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
