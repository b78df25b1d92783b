//! Lexical strata: median frequency split, training-corpus overlap,
//! seen/unseen labels and balanced per-cell sampling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::annotation::{fold_case, FrequencyTable};
use crate::inventory::{OnsetClass, UnknownLabel};
use crate::tokens::VowelToken;

#[derive(Debug, Error, PartialEq)]
pub enum StrataError {
    #[error("empty word set")]
    EmptyWords,
    #[error("training transcripts contain no words")]
    EmptyTranscripts,
    #[error("cell {cell} has {available} tokens, {needed} requested")]
    Underfilled { cell: String, available: usize, needed: usize },
    #[error("token {0} has no stratum label for the requested split")]
    Unlabelled(String),
    #[error("n_per_cell must be at least 1")]
    BadConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FreqBand {
    High,
    Low,
}

impl FreqBand {
    pub fn as_str(self) -> &'static str {
        match self {
            FreqBand::High => "high",
            FreqBand::Low => "low",
        }
    }
}

impl fmt::Display for FreqBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FreqBand {
    type Err = UnknownLabel;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "high" => Ok(FreqBand::High),
            "low" => Ok(FreqBand::Low),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    MedianFrequency,
    SeenUnseen,
}

/// A lexical stratum under either split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stratum {
    High,
    Low,
    Seen,
    Unseen,
}

impl Stratum {
    pub fn as_str(self) -> &'static str {
        match self {
            Stratum::High => "high",
            Stratum::Low => "low",
            Stratum::Seen => "seen",
            Stratum::Unseen => "unseen",
        }
    }

    /// Strata with well-attested words, modelled with per-word curves.
    pub fn is_familiar(self) -> bool {
        matches!(self, Stratum::High | Stratum::Seen)
    }

    pub fn of(token: &VowelToken, split: Split) -> Option<Stratum> {
        match split {
            Split::MedianFrequency => token.freq_band.map(|b| match b {
                FreqBand::High => Stratum::High,
                FreqBand::Low => Stratum::Low,
            }),
            Split::SeenUnseen => token.seen.map(|s| if s { Stratum::Seen } else { Stratum::Unseen }),
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stratum {
    type Err = UnknownLabel;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "high" => Ok(Stratum::High),
            "low" => Ok(Stratum::Low),
            "seen" => Ok(Stratum::Seen),
            "unseen" => Ok(Stratum::Unseen),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrataConfig {
    pub n_per_cell: usize,
    pub seed: u64,
    pub split: Split,
}

/// Ranks words by descending count (ties in lexicographic order); the first
/// half is High, the rest Low, so an odd extra word lands in Low.
pub fn split_by_frequency(words: &BTreeSet<String>, freq: &FrequencyTable) -> Result<BTreeMap<String, FreqBand>, StrataError> {
    if words.is_empty() {
        return Err(StrataError::EmptyWords);
    }
    let mut ranked: Vec<(u64, &String)> = words.iter().map(|w| (freq.count(w), w)).collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let n_high = ranked.len() / 2;
    Ok(ranked
        .into_iter()
        .enumerate()
        .map(|(i, (_, w))| (w.clone(), if i < n_high { FreqBand::High } else { FreqBand::Low }))
        .collect())
}

/// Word types of a transcript corpus. Lines in `id|raw|normalized` form
/// contribute their last field. Characters other than letters, digits and
/// apostrophes separate words; apostrophes survive only word-internally.
pub fn training_vocabulary(transcripts: &str) -> BTreeSet<String> {
    let mut vocab = BTreeSet::new();
    for line in transcripts.lines() {
        let text = if line.contains('|') { line.rsplit('|').next().unwrap_or("") } else { line };
        for piece in text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '\u{2019}')) {
            let word = piece.trim_matches(|c| c == '\'' || c == '\u{2019}').replace('\u{2019}', "'");
            if !word.is_empty() {
                vocab.insert(fold_case(&word));
            }
        }
    }
    vocab
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumOverlap {
    pub words: usize,
    pub found: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapReport {
    /// Distinct words across all strata.
    pub vocab_size: usize,
    pub training_vocab_size: usize,
    pub strata: BTreeMap<String, StratumOverlap>,
}

impl OverlapReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("stratum\twords\tfound\toverlap\n");
        for (name, s) in &self.strata {
            out.push_str(&format!("{name}\t{}\t{}\t{}\n", s.words, s.found, s.fraction));
        }
        out.push_str(&format!("#vocab_size\t{}\n#training_vocab_size\t{}\n", self.vocab_size, self.training_vocab_size));
        out
    }
}

pub fn compute_overlap(
    word_sets: &BTreeMap<String, BTreeSet<String>>,
    transcripts: &str,
) -> Result<OverlapReport, StrataError> {
    let vocab = training_vocabulary(transcripts);
    if vocab.is_empty() {
        return Err(StrataError::EmptyTranscripts);
    }
    Ok(overlap_with_vocab(word_sets, &vocab))
}

pub fn overlap_with_vocab(word_sets: &BTreeMap<String, BTreeSet<String>>, vocab: &BTreeSet<String>) -> OverlapReport {
    let mut all = BTreeSet::new();
    let strata = word_sets
        .iter()
        .map(|(name, words)| {
            let folded: BTreeSet<String> = words.iter().map(|w| fold_case(w)).collect();
            let found = folded.iter().filter(|w| vocab.contains(*w)).count();
            let fraction = if folded.is_empty() { 0.0 } else { found as f64 / folded.len() as f64 };
            all.extend(folded.iter().cloned());
            (name.clone(), StratumOverlap { words: folded.len(), found, fraction })
        })
        .collect();
    OverlapReport { vocab_size: all.len(), training_vocab_size: vocab.len(), strata }
}

pub fn label_seen_unseen(tokens: &mut [VowelToken], training_vocab: &BTreeSet<String>) {
    for t in tokens {
        t.seen = Some(training_vocab.contains(&fold_case(&t.word)));
    }
}

/// Sets `freq_band` on every token from a word → band map; words missing
/// from the map are left unlabelled.
pub fn label_frequency_bands(tokens: &mut [VowelToken], bands: &BTreeMap<String, FreqBand>) {
    for t in tokens {
        t.freq_band = bands.get(&fold_case(&t.word)).copied();
    }
}

/// Label of a (source, stratum, onset) design cell.
pub fn cell_label(source: &str, stratum: Stratum, onset: OnsetClass) -> String {
    format!("{source}|{stratum}|{onset}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub tokens: Vec<VowelToken>,
    /// Cell label per token.
    pub cells: Vec<String>,
}

impl Dataset {
    pub fn cell_counts(&self) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        for c in &self.cells {
            *out.entry(c.as_str()).or_insert(0) += 1;
        }
        out
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Draws exactly `n_per_cell` tokens without replacement from every cell of
/// (observed sources) x (observed strata) x (three onset classes). Each cell
/// has its own generator derived from the seed and the cell label, so a
/// cell's draw does not depend on the other cells. Output is ordered by
/// cell, then token id.
pub fn balanced_sample(tokens: &[VowelToken], cfg: &StrataConfig) -> Result<Dataset, StrataError> {
    if cfg.n_per_cell == 0 {
        return Err(StrataError::BadConfig);
    }
    let mut sources = BTreeSet::new();
    let mut strata = BTreeSet::new();
    let mut by_cell: BTreeMap<(String, Stratum, OnsetClass), Vec<&VowelToken>> = BTreeMap::new();
    for t in tokens.iter().filter(|t| t.onset_class.is_target()) {
        let s = Stratum::of(t, cfg.split).ok_or_else(|| StrataError::Unlabelled(t.id.clone()))?;
        sources.insert(t.source.clone());
        strata.insert(s);
        by_cell.entry((t.source.clone(), s, t.onset_class)).or_default().push(t);
    }

    let mut out = Dataset { tokens: Vec::new(), cells: Vec::new() };
    for source in &sources {
        for &stratum in &strata {
            for onset in OnsetClass::TARGETS {
                let label = cell_label(source, stratum, onset);
                let mut pool = by_cell.remove(&(source.clone(), stratum, onset)).unwrap_or_default();
                if pool.len() < cfg.n_per_cell {
                    return Err(StrataError::Underfilled { cell: label, available: pool.len(), needed: cfg.n_per_cell });
                }
                pool.sort_by(|a, b| a.id.cmp(&b.id));
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ fnv1a(&label));
                let mut picked = rand::seq::index::sample(&mut rng, pool.len(), cfg.n_per_cell).into_vec();
                picked.sort_unstable();
                for i in picked {
                    out.tokens.push(pool[i].clone());
                    out.cells.push(label.clone());
                }
            }
        }
    }
    Ok(out)
}
