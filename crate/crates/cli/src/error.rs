
use sequencer_core::SequencerError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("{0}")]
    Other(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Input(_) => 3,
            CliError::Config(_) => 4,
            CliError::Degenerate(_) => 5,
        }
    }

    pub fn read(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }

    pub fn write(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Other(format!("cannot write {}: {err}", path.display()))
    }
}

impl From<SequencerError> for CliError {
    fn from(err: SequencerError) -> Self {
        use SequencerError as E;
        let msg = err.to_string();
        match err.root() {
            E::NonRectangular { .. }
            | E::NonFinite { .. }
            | E::TooFewObjects(_)
            | E::TooFewPixels(_)
            | E::LabelCount { .. }
            | E::NegativeValue { .. }
            | E::LengthMismatch { .. }
            | E::SizeMismatch { .. } => CliError::Input(msg),
            E::ScaleTooDeep { .. }
            | E::InvalidSegment { .. }
            | E::InvalidConfig(_)
            | E::UnknownMetric(_)
            | E::ZeroWeights
            | E::DiagnosticsMissing => CliError::Config(msg),
            E::DegenerateSegment(_) | E::Degenerate(_) | E::Disconnected(_) => CliError::Degenerate(msg),
            _ => CliError::Other(msg),
        }
    }
}
