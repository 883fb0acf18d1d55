//! Error type carrying the process exit code.
//!
//! Exit codes are a stable contract: 0 success, 2 argument error, 3
//! numerical failure, 4 I/O or format error.

use std::fmt;

use trigfit_core::audio::AudioError;
use trigfit_core::expr::ExprError;
use trigfit_core::featurize::FeaturizeError;
use trigfit_core::linreg::LinregError;
use trigfit_core::sinefit::SineFitError;

pub const EXIT_ARGUMENT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO_FORMAT: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub exit_code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn argument(message: impl Into<String>) -> Self {
        Self {
            exit_code: EXIT_ARGUMENT,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            exit_code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }

    pub fn io_format(message: impl Into<String>) -> Self {
        Self {
            exit_code: EXIT_IO_FORMAT,
            message: message.into(),
        }
    }
}

impl From<ExprError> for CliError {
    fn from(e: ExprError) -> Self {
        // Bad expressions, bad bounds, and empty domains are argument
        // problems; overflow during evaluation is numerical.
        match e {
            ExprError::Overflow { .. } => Self::numerical(e.to_string()),
            _ => Self::argument(e.to_string()),
        }
    }
}

impl From<FeaturizeError> for CliError {
    fn from(e: FeaturizeError) -> Self {
        match e {
            FeaturizeError::InvalidArgument(_) => Self::argument(e.to_string()),
            FeaturizeError::EmptyDesign { .. } => Self::numerical(e.to_string()),
        }
    }
}

impl From<LinregError> for CliError {
    fn from(e: LinregError) -> Self {
        match e {
            LinregError::InvalidArgument(_) => Self::argument(e.to_string()),
            LinregError::Expr(inner) => inner.into(),
            LinregError::Featurize(inner) => inner.into(),
            LinregError::RankDeficient { .. } | LinregError::Solver(_) => {
                Self::numerical(e.to_string())
            }
        }
    }
}

impl From<AudioError> for CliError {
    fn from(e: AudioError) -> Self {
        match e {
            AudioError::InvalidArgument(_) => Self::argument(e.to_string()),
            _ => Self::io_format(e.to_string()),
        }
    }
}

impl From<SineFitError> for CliError {
    fn from(e: SineFitError) -> Self {
        match e {
            SineFitError::InvalidArgument(_) => Self::argument(e.to_string()),
            SineFitError::Divergence { .. } => Self::numerical(e.to_string()),
            SineFitError::Audio(inner) => inner.into(),
        }
    }
}

/// I/O on a named path maps to the I/O-format exit code.
pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::io_format(format!("{}: {e}", path.display()))
}
