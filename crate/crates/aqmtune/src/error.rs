use aqmtune_core::freqdesign::FreqError;
use aqmtune_core::netmodel::ModelError;
use aqmtune_core::ddesim::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Empty(String),
    #[error("{0}")]
    Numeric(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// 0 success, 2 configuration, 3 empty result, 4 numeric or output failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Empty(_) => 3,
            CliError::Numeric(_) | CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(format!("network parameters: {e}"))
    }
}

impl From<FreqError> for CliError {
    fn from(e: FreqError) -> Self {
        match e {
            FreqError::EmptyRegion => CliError::Empty("stability region is empty".into()),
            FreqError::Model(m) => m.into(),
            FreqError::InvalidGrid | FreqError::NonPositiveFrequency(_) => CliError::Config(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::StepTooLarge { .. } => CliError::Numeric(e.to_string()),
            SimError::InvalidScenario(_) | SimError::InvalidOptions(_) => CliError::Config(e.to_string()),
        }
    }
}
