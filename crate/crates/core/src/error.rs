use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the crate.
///
/// [`Error::is_input_error`] separates malformed inputs (bad files, bad
/// arguments) from data or model problems discovered while processing
/// otherwise well-formed inputs.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed MIDI file: {0}")]
    MalformedMidi(String),
    #[error("unsupported MIDI file: {0}")]
    UnsupportedMidi(String),
    #[error("song contains no notes")]
    EmptySong,
    #[error("invalid note: {0}")]
    InvalidNote(String),
    #[error("pitch {0} is outside the MIDI range 0..=127")]
    PitchOutOfRange(i32),
    #[error("malformed WAV data: {0}")]
    MalformedWav(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedWav(String),
    #[error("clip has {len} samples, at least {min} are required")]
    ClipTooShort { len: usize, min: usize },
    #[error("invalid audio clip: {0}")]
    InvalidClip(String),
    #[error("invalid instrument profile: {0}")]
    InvalidProfile(String),
    #[error("invalid phrase template: {0}")]
    InvalidTemplate(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),
    #[error("radius mismatch: {0} vs {1}")]
    RadiusMismatch(f64, f64),
    #[error("invalid radius {0}, must be positive and finite")]
    InvalidRadius(f64),
    #[error("invalid emotion target: {0}")]
    InvalidTarget(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("training diverged at epoch {epoch}, step {step}: loss {loss}")]
    NonFiniteLoss { epoch: usize, step: usize, loss: f64 },
    #[error("invalid manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("invalid model file: {0}")]
    ModelFormat(String),
    #[error("every sweep candidate failed")]
    AllCandidatesFailed,
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by unreadable or malformed inputs.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::MalformedMidi(_)
                | Error::UnsupportedMidi(_)
                | Error::MalformedWav(_)
                | Error::UnsupportedWav(_)
                | Error::InvalidProfile(_)
                | Error::InvalidTemplate(_)
                | Error::InvalidTarget(_)
                | Error::InvalidConfig(_)
                | Error::Manifest { .. }
                | Error::Io { .. }
        )
    }
}
