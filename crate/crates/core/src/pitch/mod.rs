//! F0 estimation from audio, speaker-adapted two-pass extraction, and the
//! delimited contour format used to import externally computed pitch.

mod contour_io;
mod range;
mod tracker;
mod wav;

pub use contour_io::{read_contour, write_contour};
pub use range::{speaker_range, two_pass_extract, SpeakerRange, TwoPassOutput, MIN_VOICED_FRAMES};
pub use tracker::{extract_audio, extract_f0, PitchConfig, PitchContour, PitchFrame};
pub use wav::{read_wav, read_wav_bytes, Audio};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PitchError {
    #[error("invalid pitch settings: {0}")]
    Config(String),
    #[error("invalid audio input: {0}")]
    Input(String),
    #[error("speaker {speaker}: only {voiced} voiced frames, need {needed}; keep the default range")]
    TooFewVoiced { speaker: String, voiced: usize, needed: usize },
    #[error("contour line {line}: {message}")]
    Contour { line: usize, message: String },
    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
}
