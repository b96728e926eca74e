use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("selftest failed: {0}")]
    SelftestFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Invalid(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::Io(_) => 5,
            CliError::SelftestFailed(_) => 6,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Invalid(_) => "invalid_parameter",
            CliError::NonConvergence(_) => "non_convergence",
            CliError::Io(_) => "io",
            CliError::SelftestFailed(_) => "selftest_failed",
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord { error: self.kind(), message: self.to_string(), exit_code: self.exit_code() }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl From<gravdec::Error> for CliError {
    fn from(e: gravdec::Error) -> Self {
        match e {
            gravdec::Error::InvalidInput(m) => CliError::Invalid(m),
            e @ gravdec::Error::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
