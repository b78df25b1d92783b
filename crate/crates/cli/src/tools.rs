//! The `overlap` and `pitch` subcommands.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::{bail, Context, Result};

use segprobe_core::pitch::{read_contour, read_wav, two_pass_extract, write_contour, PitchConfig, PitchContour};
use segprobe_core::strata::{compute_overlap, OverlapReport};

/// Reads a word list: one word per line, optionally followed by a tab and
/// a stratum name. Lines without a stratum go to `all`; a `word` header
/// line is skipped.
pub fn parse_word_list(text: &str) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let mut sets: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r').trim_start_matches('\u{feff}');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t').map(str::trim);
        let word = fields.next().unwrap_or_default();
        let stratum = fields.next().filter(|s| !s.is_empty()).unwrap_or("all");
        if i == 0 && word.eq_ignore_ascii_case("word") {
            continue;
        }
        if word.is_empty() {
            bail!("word list line {}: empty word", i + 1);
        }
        sets.entry(stratum.to_string()).or_default().insert(word.to_string());
    }
    if sets.is_empty() {
        bail!("word list is empty");
    }
    Ok(sets)
}

pub fn overlap(word_list: &Path, transcripts: &Path) -> Result<OverlapReport> {
    let words = std::fs::read_to_string(word_list).with_context(|| format!("cannot read {}", word_list.display()))?;
    let text = std::fs::read_to_string(transcripts).with_context(|| format!("cannot read {}", transcripts.display()))?;
    let sets = parse_word_list(&words).with_context(|| format!("in {}", word_list.display()))?;
    compute_overlap(&sets, &text).with_context(|| format!("with transcripts {}", transcripts.display()))
}

/// Tracks a WAV file in two passes, or with `import`, reads a precomputed
/// contour instead and checks it lies within the recording.
pub fn pitch(wav: &Path, import: Option<&Path>, cfg: &PitchConfig) -> Result<PitchContour> {
    cfg.validate()?;
    let audio = read_wav(wav).with_context(|| format!("cannot read {}", wav.display()))?;
    if let Some(path) = import {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let contour = read_contour(&text, cfg).with_context(|| format!("in {}", path.display()))?;
        if let Some(end) = contour.end_time() {
            if end > audio.duration() + contour.time_step {
                bail!("contour {} ends at {end} s, after the {} s recording", path.display(), audio.duration());
            }
        }
        return Ok(contour);
    }
    let mut input = BTreeMap::new();
    input.insert(String::from("speaker"), vec![audio]);
    let mut out = two_pass_extract(&input, cfg);
    for w in &out.warnings {
        log::warn!("{w}");
    }
    let contour = out.contours.remove("speaker").and_then(|mut v| v.pop()).expect("one file in, one result out");
    contour.with_context(|| format!("tracking {}", wav.display()))
}

pub fn contour_text(c: &PitchContour) -> String {
    write_contour(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_list_forms() {
        let sets = parse_word_list("word\tstratum\ncat\thigh\ndog\tlow\nemu\n").unwrap();
        assert_eq!(sets["high"].len(), 1);
        assert_eq!(sets["low"].len(), 1);
        assert!(sets["all"].contains("emu"));
        assert!(parse_word_list("\n\n").is_err());
    }
}
