use std::process::ExitCode;

use ndr_core::NdrError;

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    NoOracle(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
            CliError::NoOracle(_) => 4,
        })
    }
}

impl From<NdrError> for CliError {
    fn from(e: NdrError) -> Self {
        let msg = e.to_string();
        match e {
            NdrError::NotPositiveDefinite
            | NdrError::DegenerateSupport
            | NdrError::SingularGapSystem
            | NdrError::BranchInconsistency(_)
            | NdrError::QuadratureTolerance { .. } => CliError::Solver(msg),
            NdrError::NoOracle => CliError::NoOracle(msg),
            _ => CliError::Input(msg),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(format!("csv: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
