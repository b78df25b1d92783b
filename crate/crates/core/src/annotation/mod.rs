//! Corpus inputs: TextGrid annotations, pronunciation dictionaries and
//! word-frequency lists.

mod lexicon;
mod textgrid;

pub use lexicon::{parse_frequency_list, parse_pron_dict, parse_pron_dict_with, FrequencyTable, PronDict, Pronunciation};
pub use textgrid::{
    decode_textgrid_bytes, parse_textgrid, serialize_textgrid, AnnotationDoc, Interval, IntervalTier, Point,
    PointTier, Tier,
};

use thiserror::Error;

/// Parse failure with the 1-based line (or row) it was detected on. Line 0
/// means the problem is not tied to a position in the input.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

/// Simple lowercase mapping used for every word key.
pub fn fold_case(word: &str) -> String {
    word.trim().to_lowercase()
}
