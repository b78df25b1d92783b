use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{extract_audio, Audio, PitchConfig, PitchContour, PitchError};

/// Pooled voiced frames required before a speaker range is trusted.
pub const MIN_VOICED_FRAMES: usize = 50;
const FLOOR_FACTOR: f64 = 0.75;
const CEILING_FACTOR: f64 = 2.5;
const RANGE_LIMITS: (f64, f64) = (50.0, 800.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerRange {
    pub speaker: String,
    pub floor: f64,
    pub ceiling: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Floor 0.75 x Q1 and ceiling 2.5 x Q3 of the pooled voiced F0, clamped to
/// [50, 800] Hz.
pub fn speaker_range(speaker: &str, first_pass: &[PitchContour]) -> Result<SpeakerRange, PitchError> {
    let mut pooled: Vec<f64> = first_pass.iter().flat_map(|c| c.voiced_f0()).collect();
    if pooled.len() < MIN_VOICED_FRAMES {
        return Err(PitchError::TooFewVoiced {
            speaker: speaker.to_string(),
            voiced: pooled.len(),
            needed: MIN_VOICED_FRAMES,
        });
    }
    pooled.sort_by(f64::total_cmp);
    let (lo, hi) = RANGE_LIMITS;
    let floor = (FLOOR_FACTOR * quantile(&pooled, 0.25)).clamp(lo, hi);
    let ceiling = (CEILING_FACTOR * quantile(&pooled, 0.75)).clamp(lo, hi);
    if floor >= ceiling {
        return Err(PitchError::Config(format!("degenerate range for speaker {speaker}: [{floor}, {ceiling}]")));
    }
    Ok(SpeakerRange { speaker: speaker.to_string(), floor, ceiling })
}

#[derive(Debug)]
pub struct TwoPassOutput {
    /// Per speaker, one result per input file in input order.
    pub contours: BTreeMap<String, Vec<Result<PitchContour, PitchError>>>,
    /// Adapted range per speaker; absent where the defaults were kept.
    pub ranges: BTreeMap<String, SpeakerRange>,
    pub warnings: Vec<String>,
}

/// First pass with `defaults`, then a second pass per speaker with the
/// adapted floor and ceiling. Speakers without enough voiced frames keep
/// their first-pass contours and get a warning.
pub fn two_pass_extract(audio_by_speaker: &BTreeMap<String, Vec<Audio>>, defaults: &PitchConfig) -> TwoPassOutput {
    let mut contours = BTreeMap::new();
    let mut ranges = BTreeMap::new();
    let mut warnings = Vec::new();
    for (speaker, files) in audio_by_speaker {
        let first: Vec<Result<PitchContour, PitchError>> = files.par_iter().map(|a| extract_audio(a, defaults)).collect();
        let ok: Vec<PitchContour> = first.iter().filter_map(|r| r.as_ref().ok().cloned()).collect();
        match speaker_range(speaker, &ok) {
            Ok(range) => {
                let cfg = defaults.with_range(range.floor, range.ceiling);
                let second = files.par_iter().map(|a| extract_audio(a, &cfg)).collect();
                contours.insert(speaker.clone(), second);
                ranges.insert(speaker.clone(), range);
            }
            Err(e) => {
                warnings.push(e.to_string());
                contours.insert(speaker.clone(), first);
            }
        }
    }
    TwoPassOutput { contours, ranges, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pitch::PitchFrame;

    fn contour_of(values: &[f64]) -> PitchContour {
        PitchContour {
            frames: values
                .iter()
                .enumerate()
                .map(|(i, &v)| PitchFrame { time: i as f64 * 0.01, f0: Some(v), strength: 1.0 })
                .collect(),
            floor: 50.0,
            ceiling: 800.0,
            time_step: 0.01,
        }
    }

    #[test]
    fn constant_pool() {
        let r = speaker_range("s1", &[contour_of(&[200.0; 60])]).unwrap();
        assert_eq!((r.floor, r.ceiling), (150.0, 500.0));
    }

    #[test]
    fn uniform_pool_matches_sorted_quartiles() {
        // 801 evenly spaced points over [180, 260]
        let values: Vec<f64> = (0..=800).map(|i| 180.0 + 0.1 * i as f64).collect();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let q1 = sorted[200];
        let q3 = sorted[600];
        assert!((q1 - 200.0).abs() < 1e-9 && (q3 - 240.0).abs() < 1e-9);
        let r = speaker_range("s", &[contour_of(&values[..400]), contour_of(&values[400..])]).unwrap();
        assert!((r.floor - 0.75 * q1).abs() < 1e-9);
        assert!((r.ceiling - 2.5 * q3).abs() < 1e-9);
    }

    #[test]
    fn too_few_voiced_frames() {
        let err = speaker_range("s", &[contour_of(&[200.0; 10])]).unwrap_err();
        assert!(matches!(err, PitchError::TooFewVoiced { voiced: 10, .. }));
    }

    #[test]
    fn clamps_to_limits() {
        let r = speaker_range("s", &[contour_of(&[60.0; 60]), contour_of(&[400.0; 60])]).unwrap();
        assert_eq!(r.floor, 50.0);
        assert_eq!(r.ceiling, 800.0);
    }
}
