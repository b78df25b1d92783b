use std::collections::BTreeMap;

use super::{fold_case, ParseError};
use crate::inventory::Inventory;

/// Word counts keyed by case-folded word.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyTable {
    pub entries: BTreeMap<String, u64>,
}

impl FrequencyTable {
    /// Count for a word; absent words count 0.
    pub fn count(&self, word: &str) -> u64 {
        self.entries.get(&fold_case(word)).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reads a delimited frequency list with a header row. The delimiter is a
/// tab if the header contains one, otherwise a comma.
pub fn parse_frequency_list(doc: &str, word_column: &str, count_column: &str) -> Result<FrequencyTable, ParseError> {
    let doc = doc.strip_prefix('\u{feff}').unwrap_or(doc);
    let header = doc.lines().next().ok_or_else(|| ParseError::new(1, "missing header row"))?;
    let delimiter = if header.contains('\t') { b'\t' } else { b',' };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(doc.as_bytes());
    let headers = reader.headers().map_err(|e| ParseError::new(1, e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ParseError::new(1, format!("column \"{name}\" not found in header")))
    };
    let wi = find(word_column)?;
    let ci = find(count_column)?;

    let mut table = FrequencyTable::default();
    for record in reader.records() {
        let record = record.map_err(|e| ParseError::new(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let word = record.get(wi).ok_or_else(|| ParseError::new(row, format!("row has no \"{word_column}\" field")))?;
        let raw = record.get(ci).ok_or_else(|| ParseError::new(row, format!("row has no \"{count_column}\" field")))?;
        let count = parse_count(raw).ok_or_else(|| ParseError::new(row, format!("count \"{raw}\" is not a non-negative integer")))?;
        *table.entries.entry(fold_case(word)).or_insert(0) += count;
    }
    Ok(table)
}

fn parse_count(raw: &str) -> Option<u64> {
    if let Ok(v) = raw.parse::<u64>() {
        return Some(v);
    }
    // some exports write integral counts as "12.0"
    let v: f64 = raw.parse().ok()?;
    (v >= 0.0 && v.fract() == 0.0 && v < 1e18).then_some(v as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pronunciation {
    pub phones: Vec<String>,
    /// Parallel to `phones`: true where the label is outside the inventory.
    pub unknown: Vec<bool>,
}

impl Pronunciation {
    pub fn has_unknown(&self) -> bool {
        self.unknown.iter().any(|&u| u)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PronDict {
    pub entries: BTreeMap<String, Vec<Pronunciation>>,
}

impl PronDict {
    pub fn get(&self, word: &str) -> Option<&[Pronunciation]> {
        self.entries.get(&fold_case(word)).map(Vec::as_slice)
    }

    pub fn unknown_phones(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for pron in self.entries.values().flatten() {
            for (p, &u) in pron.phones.iter().zip(&pron.unknown) {
                if u {
                    *out.entry(p.clone()).or_insert(0) += 1;
                }
            }
        }
        out
    }
}

pub fn parse_pron_dict(doc: &str) -> Result<PronDict, ParseError> {
    parse_pron_dict_with(doc, &Inventory::builtin())
}

/// Reads MFA-style lines `word<TAB>phones`. Newer MFA dictionaries put
/// probability columns between word and phones; the last tab field is taken
/// as the phone string. Lines without tabs split on the first whitespace.
pub fn parse_pron_dict_with(doc: &str, inventory: &Inventory) -> Result<PronDict, ParseError> {
    let mut dict = PronDict::default();
    for (i, raw) in doc.lines().enumerate() {
        let line = i + 1;
        let text = raw.trim_end_matches('\r');
        let text = if line == 1 { text.trim_start_matches('\u{feff}') } else { text };
        if text.trim().is_empty() {
            continue;
        }
        let (word, phones) = match text.split_once('\t') {
            Some((w, rest)) => (w, rest.rsplit('\t').next().unwrap_or("")),
            None => text.trim().split_once(char::is_whitespace).unwrap_or((text.trim(), "")),
        };
        let word = fold_case(word);
        if word.is_empty() {
            return Err(ParseError::new(line, "empty word"));
        }
        let phones: Vec<String> = phones.split_whitespace().map(str::to_string).collect();
        if phones.is_empty() {
            return Err(ParseError::new(line, format!("empty phone sequence for \"{word}\"")));
        }
        let unknown = phones.iter().map(|p| !inventory.contains(p)).collect();
        dict.entries.entry(word).or_default().push(Pronunciation { phones, unknown });
    }
    Ok(dict)
}
