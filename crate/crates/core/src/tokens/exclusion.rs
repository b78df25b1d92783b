use super::{time_prop, Candidate, Rejection, VowelToken, N_POINTS};
use crate::pitch::PitchContour;

/// Vowels shorter than this are excluded.
pub const MIN_DURATION: f64 = 0.050;
/// Tokens whose unvoiced frame fraction exceeds this are excluded.
const MAX_UNVOICED_FRACTION: f64 = 0.5;
/// Adjacent normalized points further apart than this flag an alignment or
/// tracking error.
pub const MAX_POINT_JUMP_SEMITONES: f64 = 8.0;

/// Samples the voiced frames at the 21 normalized positions of
/// `[start, end]`. Gaps between voiced frames are bridged linearly; before
/// the first and after the last voiced frame the nearest value is held.
/// `voiced` must be time-ordered and non-empty.
pub fn time_normalize(voiced: &[(f64, f64)], start: f64, end: f64) -> Vec<f64> {
    assert!(!voiced.is_empty(), "time_normalize needs at least one voiced frame");
    (0..N_POINTS)
        .map(|j| {
            let t = start + time_prop(j) * (end - start);
            let k = voiced.partition_point(|&(ft, _)| ft <= t);
            if k == 0 {
                voiced[0].1
            } else if k == voiced.len() {
                voiced[k - 1].1
            } else {
                let (t0, f0) = voiced[k - 1];
                let (t1, f1) = voiced[k];
                if t1 == t0 {
                    f0
                } else {
                    f0 + (f1 - f0) * (t - t0) / (t1 - t0)
                }
            }
        })
        .collect()
}

/// Screens one candidate against its contour.
///
/// Order of checks: duration, contour coverage, unvoiced fraction (over
/// frames whose centers fall inside the vowel), then the point-to-point jump
/// check on the normalized trajectory.
pub fn apply_exclusions(
    candidate: &Candidate,
    contour: &PitchContour,
    source: &str,
    id: String,
) -> Result<VowelToken, Rejection> {
    let vowel = &candidate.vowel;
    let duration = vowel.duration();
    if duration < MIN_DURATION {
        return Err(Rejection::TooShort);
    }
    let half = 0.5 * contour.time_step;
    match (contour.start_time(), contour.end_time()) {
        (Some(first), Some(last)) if vowel.start >= first - half - 1e-9 && vowel.end <= last + half + 1e-9 => {}
        _ => return Err(Rejection::AlignmentSuspect),
    }
    let inside: Vec<_> = contour.frames.iter().filter(|f| vowel.contains(f.time)).collect();
    if inside.is_empty() {
        return Err(Rejection::AlignmentSuspect);
    }
    let unvoiced = inside.iter().filter(|f| !f.voiced()).count();
    if unvoiced as f64 / inside.len() as f64 > MAX_UNVOICED_FRACTION {
        return Err(Rejection::UnvoicedMajority);
    }
    let voiced: Vec<(f64, f64)> = inside.iter().filter_map(|f| f.f0.map(|hz| (f.time, hz))).collect();
    let f0_norm = time_normalize(&voiced, vowel.start, vowel.end);
    let jump = f0_norm.windows(2).map(|w| 12.0 * (w[1] / w[0]).log2().abs()).fold(0.0, f64::max);
    if jump > MAX_POINT_JUMP_SEMITONES {
        return Err(Rejection::AlignmentSuspect);
    }
    Ok(VowelToken {
        id,
        source: source.to_string(),
        speaker: candidate.speaker.clone(),
        word: candidate.word.clone(),
        consonant: candidate.consonant.label.clone(),
        onset_class: candidate.onset_class,
        vowel: candidate.vowel.label.clone(),
        vowel_height: candidate.vowel_height,
        duration,
        f0_norm,
        zf0: None,
        seen: None,
        freq_band: None,
    })
}

/// Convenience wrapper returning the normalized trajectory of a kept token.
pub fn normalize_token(candidate: &Candidate, contour: &PitchContour) -> Result<Vec<f64>, Rejection> {
    apply_exclusions(candidate, contour, "", String::new()).map(|t| t.f0_norm)
}
