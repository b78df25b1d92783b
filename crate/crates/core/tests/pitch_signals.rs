//! Tracker accuracy on synthetic harmonic, sawtooth and silent signals.

use std::f64::consts::PI;
use std::time::Instant;

use segprobe_core::pitch::{extract_f0, PitchConfig, PitchContour};

const SR: f64 = 16_000.0;

fn harmonic(f0: f64, secs: f64) -> Vec<f64> {
    (0..(secs * SR) as usize)
        .map(|i| {
            let t = i as f64 / SR;
            (1..=6).map(|h| (2.0 * PI * f0 * h as f64 * t).sin() / h as f64).sum::<f64>() * 0.3
        })
        .collect()
}

fn sawtooth(f0: f64, secs: f64) -> Vec<f64> {
    (0..(secs * SR) as usize).map(|i| 0.5 * (2.0 * ((i as f64 / SR * f0) % 1.0) - 1.0)).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn voiced(c: &PitchContour) -> Vec<f64> {
    c.voiced_f0().collect()
}

#[test]
fn harmonic_signals_within_half_a_percent() {
    let clock = Instant::now();
    let cfg = PitchConfig::default();
    for f0 in [90.0, 150.0, 220.0, 350.0] {
        let c = extract_f0(&harmonic(f0, 0.8), SR, &cfg).unwrap();
        let est = voiced(&c);
        assert_eq!(est.len(), c.frames.len(), "{f0} Hz: unvoiced frames in a steady tone");
        let err = median(est.iter().map(|e| (e - f0).abs() / f0).collect());
        assert!(err < 0.005, "{f0} Hz: median relative error {err}");
    }
    assert!(clock.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn sawtooth_has_no_octave_errors() {
    let c = extract_f0(&sawtooth(110.0, 0.8), SR, &PitchConfig::default()).unwrap();
    let est = voiced(&c);
    assert!(!est.is_empty());
    for e in est {
        assert!((e / 110.0).log2().abs() < 0.1, "frame at {e} Hz");
    }
}

#[test]
fn silence_is_fully_unvoiced() {
    let c = extract_f0(&vec![0.0; SR as usize], SR, &PitchConfig::default()).unwrap();
    assert!(!c.frames.is_empty());
    assert!(c.frames.iter().all(|f| !f.voiced()));
}

/// A silent gap between two tones is unvoiced and does not disturb the tones.
#[test]
fn tone_gap_tone() {
    let mut s = harmonic(200.0, 0.3);
    s.extend(vec![0.0; (0.3 * SR) as usize]);
    s.extend(harmonic(200.0, 0.3));
    let c = extract_f0(&s, SR, &PitchConfig::default()).unwrap();
    for f in &c.frames {
        if f.time > 0.36 && f.time < 0.54 {
            assert!(!f.voiced(), "frame at {}", f.time);
        }
        if let Some(hz) = f.f0 {
            assert!((hz - 200.0).abs() < 2.0, "{} Hz at {}", hz, f.time);
        }
    }
}
