//! Phone classification: onset classes for consonants and height for vowels.
//!
//! The built-in table covers the MFA US-English IPA phone set used in the
//! analysis: 8 voiced obstruents, 14 voiceless obstruents, 9 sonorants and
//! 12 monophthongs. ARPAbet spellings (stress digits stripped) and a few
//! ASCII variants resolve through an alias table to the same entries.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OnsetClass {
    VoicedObstruent,
    VoicelessObstruent,
    Sonorant,
    Other,
}

impl OnsetClass {
    /// The three target classes, sonorant (the reference level) first.
    pub const TARGETS: [OnsetClass; 3] =
        [OnsetClass::Sonorant, OnsetClass::VoicedObstruent, OnsetClass::VoicelessObstruent];

    pub fn as_str(self) -> &'static str {
        match self {
            OnsetClass::VoicedObstruent => "voiced",
            OnsetClass::VoicelessObstruent => "voiceless",
            OnsetClass::Sonorant => "sonorant",
            OnsetClass::Other => "other",
        }
    }

    pub fn is_target(self) -> bool {
        self != OnsetClass::Other
    }
}

impl fmt::Display for OnsetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("unknown label \"{0}\"")]
pub struct UnknownLabel(pub String);

impl FromStr for OnsetClass {
    type Err = UnknownLabel;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "voiced" | "voicedobstruent" | "voiced_obstruent" => Ok(OnsetClass::VoicedObstruent),
            "voiceless" | "voicelessobstruent" | "voiceless_obstruent" => Ok(OnsetClass::VoicelessObstruent),
            "sonorant" => Ok(OnsetClass::Sonorant),
            "other" => Ok(OnsetClass::Other),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VowelHeight {
    High,
    Mid,
    Low,
}

impl VowelHeight {
    pub fn as_str(self) -> &'static str {
        match self {
            VowelHeight::High => "high",
            VowelHeight::Mid => "mid",
            VowelHeight::Low => "low",
        }
    }
}

impl fmt::Display for VowelHeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VowelHeight {
    type Err = UnknownLabel;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "high" => Ok(VowelHeight::High),
            "mid" => Ok(VowelHeight::Mid),
            "low" => Ok(VowelHeight::Low),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VowelInfo {
    pub is_vowel: bool,
    pub height: Option<VowelHeight>,
}

impl VowelInfo {
    const NOT_A_VOWEL: VowelInfo = VowelInfo { is_vowel: false, height: None };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Consonant(OnsetClass),
    Vowel(VowelHeight),
}

const VOICED: [&str; 8] = ["b", "d", "g", "dʒ", "ʒ", "v", "ð", "z"];
const VOICELESS: [&str; 14] = ["p", "t", "k", "tʃ", "f", "θ", "s", "ʃ", "h", "pʰ", "tʰ", "kʰ", "c", "ç"];
const SONORANT: [&str; 9] = ["m", "n", "ŋ", "ɲ", "l", "j", "w", "mʲ", "n\u{0329}"];
const VOWELS: [(&str, VowelHeight); 12] = [
    ("i", VowelHeight::High),
    ("iː", VowelHeight::High),
    ("ɪ", VowelHeight::High),
    ("ɛ", VowelHeight::Mid),
    ("æ", VowelHeight::Low),
    ("ɑ", VowelHeight::Low),
    ("ɑː", VowelHeight::Low),
    ("ə", VowelHeight::Mid),
    ("ɒ", VowelHeight::Low),
    ("u", VowelHeight::High),
    ("ʊ", VowelHeight::High),
    ("ɔ", VowelHeight::Mid),
];

/// Alternative spellings mapped to canonical table labels.
const ALIASES: [(&str, &str); 37] = [
    // ARPAbet
    ("B", "b"),
    ("D", "d"),
    ("G", "g"),
    ("JH", "dʒ"),
    ("ZH", "ʒ"),
    ("V", "v"),
    ("DH", "ð"),
    ("Z", "z"),
    ("P", "p"),
    ("T", "t"),
    ("K", "k"),
    ("CH", "tʃ"),
    ("F", "f"),
    ("TH", "θ"),
    ("S", "s"),
    ("SH", "ʃ"),
    ("HH", "h"),
    ("M", "m"),
    ("N", "n"),
    ("NG", "ŋ"),
    ("L", "l"),
    ("Y", "j"),
    ("W", "w"),
    ("IY", "i"),
    ("IH", "ɪ"),
    ("EH", "ɛ"),
    ("AE", "æ"),
    ("AA", "ɑ"),
    ("AH", "ə"),
    ("AO", "ɔ"),
    ("UW", "u"),
    ("UH", "ʊ"),
    // IPA variants
    ("ɡ", "g"),
    ("i:", "iː"),
    ("ɑ:", "ɑː"),
    ("d͡ʒ", "dʒ"),
    ("t͡ʃ", "tʃ"),
];

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("line {line}: {message}")]
    Override { line: usize, message: String },
}

/// Lookup table from phone label to segment type.
#[derive(Debug, Clone)]
pub struct Inventory {
    segments: HashMap<String, Segment>,
    aliases: HashMap<String, String>,
}

impl Default for Inventory {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Inventory {
    pub fn builtin() -> Self {
        let mut segments = HashMap::new();
        for p in VOICED {
            segments.insert(p.to_string(), Segment::Consonant(OnsetClass::VoicedObstruent));
        }
        for p in VOICELESS {
            segments.insert(p.to_string(), Segment::Consonant(OnsetClass::VoicelessObstruent));
        }
        for p in SONORANT {
            segments.insert(p.to_string(), Segment::Consonant(OnsetClass::Sonorant));
        }
        for (p, h) in VOWELS {
            segments.insert(p.to_string(), Segment::Vowel(h));
        }
        let aliases = ALIASES.iter().map(|(a, c)| (a.to_string(), c.to_string())).collect();
        Self { segments, aliases }
    }

    /// Applies an override table on top of the current entries. Each
    /// non-comment line holds `label`, `class` and optionally `height`,
    /// separated by tabs or commas; class is one of voiced, voiceless,
    /// sonorant, vowel, other.
    pub fn with_overrides(mut self, text: &str) -> Result<Self, InventoryError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(['\t', ',']).map(str::trim).collect();
            if line == 1 && fields.first().is_some_and(|f| f.eq_ignore_ascii_case("label")) {
                continue;
            }
            let err = |message: String| InventoryError::Override { line, message };
            let (label, class) = match fields.as_slice() {
                [label, class, ..] if !label.is_empty() => (*label, *class),
                _ => return Err(err("expected label and class".into())),
            };
            let seg = if class.eq_ignore_ascii_case("vowel") {
                let h = fields.get(2).ok_or_else(|| err(format!("vowel \"{label}\" needs a height")))?;
                Segment::Vowel(h.parse().map_err(|e: UnknownLabel| err(e.to_string()))?)
            } else {
                Segment::Consonant(class.parse().map_err(|e: UnknownLabel| err(e.to_string()))?)
            };
            self.aliases.remove(label);
            self.segments.insert(label.to_string(), seg);
        }
        Ok(self)
    }

    fn canonical<'a>(&'a self, label: &'a str) -> &'a str {
        let label = label.trim();
        if self.segments.contains_key(label) {
            return label;
        }
        if let Some(c) = self.aliases.get(label) {
            return c;
        }
        // ARPAbet stress markers: AA1, IY0
        let stripped = label.trim_end_matches(|c: char| c.is_ascii_digit());
        if let Some(c) = self.aliases.get(stripped) {
            return c;
        }
        label
    }

    pub fn lookup(&self, label: &str) -> Option<Segment> {
        self.segments.get(self.canonical(label)).copied()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.lookup(label).is_some()
    }

    pub fn classify_onset(&self, label: &str) -> OnsetClass {
        match self.lookup(label) {
            Some(Segment::Consonant(c)) => c,
            _ => OnsetClass::Other,
        }
    }

    pub fn classify_vowel(&self, label: &str) -> VowelInfo {
        match self.lookup(label) {
            Some(Segment::Vowel(h)) => VowelInfo { is_vowel: true, height: Some(h) },
            _ => VowelInfo::NOT_A_VOWEL,
        }
    }

    /// Number of canonical entries per class, in the order voiced,
    /// voiceless, sonorant, vowel.
    pub fn class_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for seg in self.segments.values() {
            match seg {
                Segment::Consonant(OnsetClass::VoicedObstruent) => counts[0] += 1,
                Segment::Consonant(OnsetClass::VoicelessObstruent) => counts[1] += 1,
                Segment::Consonant(OnsetClass::Sonorant) => counts[2] += 1,
                Segment::Vowel(_) => counts[3] += 1,
                Segment::Consonant(OnsetClass::Other) => {}
            }
        }
        counts
    }

    pub fn aliases(&self) -> impl Iterator<Item = (&str, &str)> {
        self.aliases.iter().map(|(a, c)| (a.as_str(), c.as_str()))
    }
}

/// Classification against the built-in table.
pub fn classify_onset(label: &str) -> OnsetClass {
    builtin().classify_onset(label)
}

pub fn classify_vowel(label: &str) -> VowelInfo {
    builtin().classify_vowel(label)
}

fn builtin() -> &'static Inventory {
    static TABLE: std::sync::OnceLock<Inventory> = std::sync::OnceLock::new();
    TABLE.get_or_init(Inventory::builtin)
}
