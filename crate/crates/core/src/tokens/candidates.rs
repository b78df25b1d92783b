use super::TokenError;
use crate::annotation::{fold_case, AnnotationDoc, Interval};
use crate::inventory::{Inventory, OnsetClass, VowelHeight};

const BOUNDARY_EPS: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct CandidateOptions<'a> {
    pub phones_tier: &'a str,
    pub words_tier: &'a str,
    /// Only accept consonants that begin their word.
    pub word_initial_only: bool,
    pub inventory: &'a Inventory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub word: String,
    pub speaker: String,
    pub consonant: Interval,
    pub vowel: Interval,
    pub onset_class: OnsetClass,
    pub vowel_height: VowelHeight,
    /// Index of the vowel interval within the phones tier.
    pub vowel_index: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateScan {
    pub candidates: Vec<Candidate>,
    /// Target vowels without a qualifying immediately preceding consonant.
    pub no_onset: usize,
}

/// Every target vowel whose immediately preceding phone is a target
/// consonant in the same word yields one candidate.
pub fn find_candidates(doc: &AnnotationDoc, speaker: &str, opts: &CandidateOptions<'_>) -> Result<CandidateScan, TokenError> {
    let phones = doc.interval_tier(opts.phones_tier).ok_or_else(|| TokenError::MissingTier(opts.phones_tier.into()))?;
    let words = doc.interval_tier(opts.words_tier).ok_or_else(|| TokenError::MissingTier(opts.words_tier.into()))?;
    let word_at = |iv: &Interval| {
        let mid = 0.5 * (iv.start + iv.end);
        words.intervals.iter().position(|w| w.contains(mid) && !w.label.trim().is_empty())
    };

    let mut scan = CandidateScan::default();
    for (i, vowel) in phones.intervals.iter().enumerate() {
        let Some(height) = opts.inventory.classify_vowel(&vowel.label).height else {
            continue;
        };
        let Some(wi) = word_at(vowel) else {
            continue;
        };
        let word = &words.intervals[wi];
        let prev = i.checked_sub(1).map(|j| &phones.intervals[j]);
        let onset = prev.and_then(|c| {
            let class = opts.inventory.classify_onset(&c.label);
            let same_word = word_at(c) == Some(wi);
            let adjacent = (c.end - vowel.start).abs() < BOUNDARY_EPS;
            let initial_ok = !opts.word_initial_only || (c.start - word.start).abs() < BOUNDARY_EPS;
            (class.is_target() && same_word && adjacent && initial_ok).then_some((c, class))
        });
        match onset {
            Some((c, class)) => scan.candidates.push(Candidate {
                word: fold_case(&word.label),
                speaker: speaker.to_string(),
                consonant: c.clone(),
                vowel: vowel.clone(),
                onset_class: class,
                vowel_height: height,
                vowel_index: i,
            }),
            None => scan.no_onset += 1,
        }
    }
    Ok(scan)
}
