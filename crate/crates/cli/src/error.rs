use gss_core::bench::BenchError;
use gss_core::eval::EvalError;
use gss_core::io::RecordIoError;
use gss_core::metrics::MetricError;
use gss_gateway::{ArchiveError, GatewayError};
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const DATA: i32 = 3;
    pub const TRANSPORT: i32 = 4;
    pub const NUMERIC: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config values or an unusable output directory.
    #[error("usage: {0}")]
    Usage(String),
    /// Missing, malformed or inconsistent input files.
    #[error("data: {0}")]
    Data(String),
    #[error("transport: {0}")]
    Transport(String),
    /// Singular matrices, degenerate statistics, non-finite results.
    #[error("numeric: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => exit::USAGE,
            Self::Data(_) => exit::DATA,
            Self::Transport(_) => exit::TRANSPORT,
            Self::Numeric(_) => exit::NUMERIC,
        }
    }

    /// Same class, message prefixed with `what`.
    pub fn context(self, what: &str) -> Self {
        match self {
            Self::Usage(m) => Self::Usage(format!("{what}: {m}")),
            Self::Data(m) => Self::Data(format!("{what}: {m}")),
            Self::Transport(m) => Self::Transport(format!("{what}: {m}")),
            Self::Numeric(m) => Self::Numeric(format!("{what}: {m}")),
        }
    }
}

impl From<RecordIoError> for CliError {
    fn from(e: RecordIoError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<ArchiveError> for CliError {
    fn from(e: ArchiveError) -> Self {
        match e {
            ArchiveError::Unencodable { .. } => Self::Numeric(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::Configuration(_) => Self::Usage(e.to_string()),
            _ => Self::Transport(e.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::Configuration(_) => Self::Usage(e.to_string()),
            MetricError::Singular { .. } | MetricError::Numeric(_) => Self::Numeric(e.to_string()),
            MetricError::Oracle { .. } => Self::Transport(e.to_string()),
            MetricError::InvalidInput(_) | MetricError::DataUnavailable { .. } => Self::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidInput(_) => Self::Data(e.to_string()),
            EvalError::Degenerate(_) => Self::Numeric(e.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<clap::Error> for CliError {
    fn from(e: clap::Error) -> Self {
        Self::Usage(e.to_string())
    }
}
