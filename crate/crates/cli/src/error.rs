use std::io;
use std::path::PathBuf;

use carbongrid::case_io::CaseError;
use carbongrid::metrics::MetricsError;
use carbongrid::mpp::MppError;
use carbongrid::opf::OpfError;
use carbongrid::sensitivity::SensitivityError;

/// Exit status for a failed computation.
pub const EXIT_COMPUTE: u8 = 1;
/// Exit status for bad flags, files or inputs.
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Opf(#[from] OpfError),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Mpp(#[from] MppError),
    #[error("{0}")]
    Compute(String),
    #[error("output failed: {0}")]
    Output(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::Read { .. }
            | CliError::Input { .. }
            | CliError::Case(_)
            | CliError::Metrics(_) => EXIT_USAGE,
            CliError::Mpp(e) => match e {
                MppError::StaleTable { .. }
                | MppError::Checksum
                | MppError::Corrupt(_)
                | MppError::TableVersion { .. }
                | MppError::Io(_)
                | MppError::Domain(_)
                | MppError::Unsupported(_)
                | MppError::Dimension { .. } => EXIT_USAGE,
                _ => EXIT_COMPUTE,
            },
            CliError::Opf(OpfError::InvalidLoad { .. }) => EXIT_USAGE,
            CliError::Opf(_)
            | CliError::Sensitivity(_)
            | CliError::Compute(_)
            | CliError::Output(_) => EXIT_COMPUTE,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(io::Error::other(e))
    }
}
