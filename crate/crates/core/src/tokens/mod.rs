//! Vowel tokens: onset+vowel pairs located in aligned annotations, screened,
//! time-normalized to 21 points and optionally z-scored per speaker.

mod candidates;
mod exclusion;
mod table;
mod zscore;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use candidates::{find_candidates, Candidate, CandidateOptions, CandidateScan};
pub use exclusion::{apply_exclusions, normalize_token, time_normalize, MAX_POINT_JUMP_SEMITONES, MIN_DURATION};
pub use table::{read_token_table, write_token_table, TOKEN_TABLE_COLUMNS};
pub use zscore::zscore_by_speaker;

use crate::inventory::{OnsetClass, VowelHeight};
use crate::strata::FreqBand;

/// Samples per normalized trajectory, endpoints included.
pub const N_POINTS: usize = 21;

/// Relative position of normalized point `j` within the vowel.
pub fn time_prop(j: usize) -> f64 {
    j as f64 / (N_POINTS - 1) as f64
}

#[derive(Debug, Error)]
pub enum TokenError {
    #[error("tier \"{0}\" not found")]
    MissingTier(String),
    #[error("speaker {speaker}: {message}")]
    Speaker { speaker: String, message: String },
    #[error("token table line {line}: {message}")]
    Table { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rejection {
    UnvoicedMajority,
    TooShort,
    AlignmentSuspect,
    NoOnset,
}

impl Rejection {
    pub const ALL: [Rejection; 4] =
        [Rejection::UnvoicedMajority, Rejection::TooShort, Rejection::AlignmentSuspect, Rejection::NoOnset];

    pub fn as_str(self) -> &'static str {
        match self {
            Rejection::UnvoicedMajority => "unvoiced_majority",
            Rejection::TooShort => "too_short",
            Rejection::AlignmentSuspect => "alignment_suspect",
            Rejection::NoOnset => "no_onset",
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VowelToken {
    /// Unique within a corpus: `source/file/vowel-interval-index`.
    pub id: String,
    pub source: String,
    pub speaker: String,
    pub word: String,
    pub consonant: String,
    pub onset_class: OnsetClass,
    pub vowel: String,
    pub vowel_height: VowelHeight,
    pub duration: f64,
    /// Hz at the 21 normalized points.
    pub f0_norm: Vec<f64>,
    /// Per-speaker z-scores of `f0_norm`, once computed.
    pub zf0: Option<Vec<f64>>,
    pub seen: Option<bool>,
    pub freq_band: Option<FreqBand>,
}

/// Candidate and rejection tallies for one batch of annotations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExclusionReport {
    pub candidates: usize,
    pub kept: usize,
    pub counts: BTreeMap<Rejection, usize>,
}

impl ExclusionReport {
    pub fn reject(&mut self, reason: Rejection) {
        *self.counts.entry(reason).or_insert(0) += 1;
    }

    pub fn count(&self, reason: Rejection) -> usize {
        self.counts.get(&reason).copied().unwrap_or(0)
    }

    pub fn rejected(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn merge(&mut self, other: &ExclusionReport) {
        self.candidates += other.candidates;
        self.kept += other.kept;
        for (r, n) in &other.counts {
            *self.counts.entry(*r).or_insert(0) += n;
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.rejected() + self.kept == self.candidates
    }
}
