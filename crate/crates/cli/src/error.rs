use thiserror::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFY_FAIL: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_ORACLE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("oracle: {0}")]
    Oracle(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Oracle(_) => EXIT_ORACLE,
            _ => EXIT_CONFIG,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

impl From<ccfom::Error> for CliError {
    fn from(e: ccfom::Error) -> Self {
        match e {
            ccfom::Error::OracleFailure { .. } => CliError::Oracle(e.to_string()),
            ccfom::Error::TraceMismatch(_) => CliError::Schema(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
