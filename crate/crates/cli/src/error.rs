use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input file, flag value or output path.
    #[error("{0}")]
    Config(String),
    /// A solver, quadrature or root finder failed.
    #[error("{0}")]
    Numeric(String),
    /// `validate` found a violated invariant.
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Validation(_) => 4,
        })
    }

    pub fn numeric(e: impl std::fmt::Display) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<qmem_core::MatchError> for CliError {
    fn from(e: qmem_core::MatchError) -> Self {
        use qmem_core::MatchError as M;
        match e {
            M::Config(_) | M::AsymmetricConfig | M::ZeroCoupling | M::WeightLength { .. } | M::NoConditions => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}
