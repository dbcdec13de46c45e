use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported distance mode: {0}")]
    UnsupportedMode(String),

    #[error("unsupported array configuration: {0}")]
    UnsupportedConfiguration(String),

    /// Both denominator terms of the bound vanish: the observations carry no range information.
    #[error("degenerate scenario: {0}")]
    DegenerateScenario(String),

    #[error("hypothesis outside sampled window: {0}")]
    WindowCoverage(String),

    #[error("numerical accuracy: {0}")]
    NumericalAccuracy(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable reason, used for null cells in sweep output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::UnsupportedMode(_) => "unsupported_mode",
            Error::UnsupportedConfiguration(_) => "unsupported_configuration",
            Error::DegenerateScenario(_) => "degenerate_scenario",
            Error::WindowCoverage(_) => "window_coverage",
            Error::NumericalAccuracy(_) => "numerical_accuracy",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Rejects non-finite or non-positive values.
pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and > 0, got {value}")))
    }
}
