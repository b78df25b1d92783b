//! Exclusion thresholds applied to candidates found in a TextGrid.

use segprobe_core::annotation::{parse_textgrid, serialize_textgrid, AnnotationDoc, Interval, IntervalTier, Tier};
use segprobe_core::inventory::Inventory;
use segprobe_core::pitch::{PitchContour, PitchFrame};
use segprobe_core::tokens::{apply_exclusions, find_candidates, CandidateOptions, ExclusionReport, Rejection};

fn tier(name: &str, xmax: f64, intervals: Vec<Interval>) -> Tier {
    Tier::Interval(IntervalTier { name: name.into(), xmin: 0.0, xmax, intervals })
}

/// Three words "pa": vowels of 100 ms, 40 ms and 100 ms.
fn document() -> AnnotationDoc {
    let spans = [(0.10, 0.15, 0.25), (0.40, 0.45, 0.49), (0.70, 0.75, 0.85)];
    let mut words = Vec::new();
    let mut phones = Vec::new();
    let mut t = 0.0;
    for (c, v, end) in spans {
        words.push(Interval::new(t, c, ""));
        words.push(Interval::new(c, end, "pa"));
        phones.push(Interval::new(t, c, ""));
        phones.push(Interval::new(c, v, "p"));
        phones.push(Interval::new(v, end, "ɑ"));
        t = end;
    }
    words.push(Interval::new(t, 1.0, ""));
    phones.push(Interval::new(t, 1.0, ""));
    AnnotationDoc { xmin: 0.0, xmax: 1.0, tiers: vec![tier("words", 1.0, words), tier("phones", 1.0, phones)] }
}

/// 10 ms frames; the first six frames of vowel 1 and the first frame of
/// vowel 3 are unvoiced.
fn contour() -> PitchContour {
    let frames = (0..100)
        .map(|i| {
            let time = 0.005 + 0.01 * i as f64;
            let unvoiced = (0.15..0.21).contains(&time) || (0.75..0.76).contains(&time);
            PitchFrame { time, f0: (!unvoiced).then_some(210.0), strength: if unvoiced { 0.0 } else { 0.9 } }
        })
        .collect();
    PitchContour { frames, floor: 75.0, ceiling: 600.0, time_step: 0.01 }
}

#[test]
fn thresholds_on_constructed_tokens() {
    let text = serialize_textgrid(&document()).unwrap();
    let doc = parse_textgrid(&text).unwrap();
    let inventory = Inventory::builtin();
    let opts = CandidateOptions { phones_tier: "phones", words_tier: "words", word_initial_only: false, inventory: &inventory };
    let scan = find_candidates(&doc, "spk", &opts).unwrap();
    assert_eq!(scan.candidates.len(), 3);
    let c = contour();
    let results: Vec<_> = scan.candidates.iter().enumerate().map(|(i, cand)| apply_exclusions(cand, &c, "src", format!("t{i}"))).collect();

    // 60% of the first vowel's frames are unvoiced
    assert_eq!(results[0].as_ref().unwrap_err(), &Rejection::UnvoicedMajority);
    assert_eq!(results[1].as_ref().unwrap_err(), &Rejection::TooShort);
    let kept = results[2].as_ref().unwrap();
    assert!((kept.duration - 0.1).abs() < 1e-9);
    assert!(kept.f0_norm.iter().all(|f| *f == 210.0));

    let mut report = ExclusionReport { candidates: results.len(), ..Default::default() };
    for r in &results {
        match r {
            Ok(_) => report.kept += 1,
            Err(reason) => report.reject(*reason),
        }
    }
    assert!(report.is_consistent());
    assert_eq!((report.count(Rejection::UnvoicedMajority), report.count(Rejection::TooShort), report.kept), (1, 1, 1));
}

#[test]
fn word_initial_only_skips_medial_onsets() {
    let words = vec![Interval::new(0.0, 0.1, ""), Interval::new(0.1, 0.4, "apa"), Interval::new(0.4, 0.5, "")];
    let phones = vec![
        Interval::new(0.0, 0.1, ""),
        Interval::new(0.1, 0.2, "ɑ"),
        Interval::new(0.2, 0.25, "p"),
        Interval::new(0.25, 0.4, "ɑ"),
        Interval::new(0.4, 0.5, ""),
    ];
    let doc = AnnotationDoc { xmin: 0.0, xmax: 0.5, tiers: vec![tier("words", 0.5, words), tier("phones", 0.5, phones)] };
    let inventory = Inventory::builtin();
    let mut opts = CandidateOptions { phones_tier: "phones", words_tier: "words", word_initial_only: false, inventory: &inventory };
    let all = find_candidates(&doc, "spk", &opts).unwrap();
    assert_eq!((all.candidates.len(), all.no_onset), (1, 1));
    opts.word_initial_only = true;
    let initial = find_candidates(&doc, "spk", &opts).unwrap();
    assert_eq!((initial.candidates.len(), initial.no_onset), (0, 2));
}
