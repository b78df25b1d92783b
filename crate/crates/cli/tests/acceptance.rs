//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use common::{fixture_copy, probe, snapshot};
use segprobe::synth::{synth_tokens, SynthSpec};
use segprobe_core::annotation::Interval;
use segprobe_core::gam::{ar1_whiten, difference_penalty, estimate_rho, fit_reml, raw_design, Gram, Penalty, RemlOptions};
use segprobe_core::inventory::{OnsetClass, VowelHeight};
use segprobe_core::pitch::{extract_f0, PitchConfig, PitchContour, PitchFrame};
use segprobe_core::probe::{probe_tokens, ResponseKind};
use segprobe_core::strata::{balanced_sample, FreqBand, Split, StrataConfig, Stratum};
use segprobe_core::tokens::{apply_exclusions, Candidate, Rejection, VowelToken, N_POINTS};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| normal(rng))
}

fn penalized_solve() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p = rng.random_range(1..=12);
        let n = rng.random_range(p + 1..=50);
        let x = gaussian(&mut rng, n, p);
        let y = DVector::from_fn(n, |_, _| normal(&mut rng));
        let pens: Vec<Penalty> = (0..rng.random_range(1..=3))
            .map(|j| {
                let q = rng.random_range(1..=p);
                let start = rng.random_range(0..=p - q);
                let r = rng.random_range(1..=q);
                let g = gaussian(&mut rng, q, r);
                Penalty::new(format!("s{j}"), vec![(start, &g * g.transpose())])
            })
            .collect();
        let lambda: Vec<f64> = pens.iter().map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
        let mut a = x.transpose() * &x;
        for (pen, l) in pens.iter().zip(&lambda) {
            a += pen.dense(p) * *l;
        }
        let Some(expected) = a.lu().solve(&(x.transpose() * &y)) else { return outcome(false, "singular oracle system") };
        match fit_reml(&Gram::from_dense(&x, &y), &pens, Some(&lambda)) {
            Ok(fit) => worst = worst.max((&fit.coefficients - &expected).norm() / expected.norm()),
            Err(e) => return outcome(false, format!("engine error: {e}")),
        }
    }
    outcome(worst < 1e-8, format!("200 instances, worst relative error {worst:.1e}"))
}

fn ar1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p = rng.random_range(1..=5);
        let n = rng.random_range(p + 2..=30);
        let rho: f64 = rng.random_range(-0.9..0.9);
        let starts: Vec<bool> = (0..n).map(|i| i == 0 || rng.random_bool(0.2)).collect();
        let traj: Vec<usize> = starts.iter().scan(0, |id, &s| {
            *id += s as usize;
            Some(*id)
        }).collect();
        let corr = DMatrix::from_fn(n, n, |i, j| if traj[i] == traj[j] { rho.powi((i as i32 - j as i32).abs()) } else { 0.0 });
        let x = gaussian(&mut rng, n, p);
        let y = DVector::from_fn(n, |_, _| normal(&mut rng));
        let rinv = corr.try_inverse().unwrap();
        let gls = (x.transpose() * &rinv * &x).lu().solve(&(x.transpose() * &rinv * &y)).unwrap();
        let (xw, yw) = ar1_whiten(&x, &y, rho, &starts).unwrap();
        let fit = fit_reml(&Gram::from_dense(&xw, &yw), &[], None).unwrap();
        worst = fit.coefficients.iter().zip(gls.iter()).fold(worst, |w, (a, b)| w.max((a - b).abs() / b.abs().max(1.0)));
    }
    let mut estimates = Vec::new();
    for rho in [0.0, 0.4, 0.8] {
        let innov = (1.0f64 - rho * rho).sqrt();
        let (mut resid, mut starts) = (Vec::with_capacity(10_000), Vec::with_capacity(10_000));
        for i in 0..10_000 {
            let start = i % 20 == 0;
            let e = if start { normal(&mut rng) } else { rho * resid[i - 1] + innov * normal(&mut rng) };
            resid.push(e);
            starts.push(start);
        }
        estimates.push(estimate_rho(&resid, &starts).unwrap());
    }
    let rho_ok = estimates.iter().zip([0.0, 0.4, 0.8]).all(|(e, r)| (e - r).abs() <= 0.05);
    outcome(
        worst < 1e-9 && rho_ok,
        format!("GLS worst difference {worst:.1e}; rho estimates {:.3}, {:.3}, {:.3}", estimates[0], estimates[1], estimates[2]),
    )
}

fn smoothing_limits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..60).map(|i| i as f64 / 59.0).collect();
    let k = 8;
    let b = raw_design(&x, k);
    let y = DVector::from_fn(x.len(), |i, _| (6.0 * x[i]).sin() + 0.3 * normal(&mut rng));
    let gram = Gram::from_dense(&b, &y);
    let heavy = fit_reml(&gram, &[Penalty::new("s", vec![(0, difference_penalty(k, 1))])], Some(&[1e12])).unwrap();
    let dev = (&b * &heavy.coefficients).iter().map(|f| (f - y.mean()).abs()).fold(0.0, f64::max);
    let free = fit_reml(&gram, &[Penalty::new("s", vec![(0, difference_penalty(k, 2))])], Some(&[0.0])).unwrap();
    let ols = (b.transpose() * &b).lu().solve(&(b.transpose() * &y)).unwrap();
    let err = (&free.coefficients - &ols).norm() / ols.norm();
    outcome(dev < 1e-6 && err < 1e-8, format!("max deviation from mean {dev:.1e}; OLS relative error {err:.1e}"))
}

/// Fits every seed in parallel and counts the seeds meeting `check`.
fn simulate(n: usize, offset: f64, check: fn(&segprobe_core::probe::SourceReport) -> (bool, bool)) -> Result<(usize, usize), String> {
    let results: Vec<Result<(bool, bool), String>> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let mut spec = SynthSpec::new(n, seed);
            spec.effects.voiceless.offset = offset;
            spec.effects.voiceless.decay = 0.5;
            let tokens = synth_tokens(&spec).map_err(|e| e.to_string())?.tokens;
            let r = probe_tokens(&tokens, "synth", Stratum::High, ResponseKind::SingleSpeakerHz, &RemlOptions::default())
                .map_err(|e| format!("seed {seed}: {e}"))?;
            Ok(check(&r))
        })
        .collect();
    let mut counts = (0, 0);
    for r in results {
        let (a, b) = r?;
        counts.0 += a as usize;
        counts.1 += b as usize;
    }
    Ok(counts)
}

const VL_SO: (OnsetClass, OnsetClass) = (OnsetClass::VoicelessObstruent, OnsetClass::Sonorant);
const VD_SO: (OnsetClass, OnsetClass) = (OnsetClass::VoicedObstruent, OnsetClass::Sonorant);

fn null_simulation() -> Outcome {
    match simulate(300, 0.0, |r| (r.difference(VL_SO).unwrap().significant_fraction() <= 0.1, true)) {
        Ok((clean, _)) => outcome(clean >= 19, format!("{clean}/20 seeds without a voiceless-sonorant interval over 10% of the span")),
        Err(e) => outcome(false, e),
    }
}

fn power_simulation() -> Outcome {
    let check = |r: &segprobe_core::probe::SourceReport| {
        (r.difference(VL_SO).unwrap().intersects(0.0, 0.3), r.difference(VD_SO).unwrap().significant_intervals.is_empty())
    };
    match simulate(1000, 1.0, check) {
        Ok((hit, quiet)) => outcome(
            hit >= 19 && quiet >= 18,
            format!("{hit}/20 seeds detect voiceless-sonorant in [0, 0.3]; {quiet}/20 without a voiced-sonorant interval"),
        ),
        Err(e) => outcome(false, e),
    }
}

fn pitch() -> Outcome {
    const SR: f64 = 16_000.0;
    let cfg = PitchConfig::default();
    let track = |s: &[f64]| extract_f0(s, SR, &cfg).unwrap();
    let mut errors = Vec::new();
    for f0 in [90.0, 150.0, 220.0, 350.0] {
        let s: Vec<f64> = (0..(0.8 * SR) as usize)
            .map(|i| (1..=6).map(|h| (2.0 * PI * f0 * h as f64 * i as f64 / SR).sin() / h as f64).sum::<f64>() * 0.3)
            .collect();
        let mut rel: Vec<f64> = track(&s).voiced_f0().map(|e| (e - f0).abs() / f0).collect();
        if rel.is_empty() {
            return outcome(false, format!("{f0} Hz tone is unvoiced"));
        }
        rel.sort_by(f64::total_cmp);
        errors.push(rel[rel.len() / 2]);
    }
    let saw: Vec<f64> = (0..(0.8 * SR) as usize).map(|i| 2.0 * ((i as f64 / SR * 110.0) % 1.0) - 1.0).collect();
    let saw_track = track(&saw);
    let octave_ok = saw_track.voiced_f0().count() > 0 && saw_track.voiced_f0().all(|e| (e / 110.0).log2().abs() < 0.1);
    let silent = track(&vec![0.0; SR as usize]).frames.iter().all(|f| !f.voiced());
    let worst = errors.iter().copied().fold(0.0, f64::max);
    outcome(
        worst < 0.005 && octave_ok && silent,
        format!("worst median error {:.3}%; sawtooth octave-free {octave_ok}; silence unvoiced {silent}", 100.0 * worst),
    )
}

fn determinism() -> Outcome {
    let dir = fixture_copy();
    let config = dir.path().join("run.toml");
    let mut trees = Vec::new();
    for _ in 0..2 {
        let r = probe(&["run", config.to_str().unwrap()]);
        if r.status.code() != Some(0) {
            return outcome(false, format!("probe run failed: {}", String::from_utf8_lossy(&r.stderr)));
        }
        trees.push(snapshot(&dir.path().join("out")));
    }
    outcome(trees[0] == trees[1], format!("{} files compared", trees[0].len()))
}

fn token(source: &str, band: FreqBand, onset: OnsetClass, i: usize) -> VowelToken {
    VowelToken {
        id: format!("{source}/{}/{onset}/{i:05}", band.as_str()),
        source: source.into(),
        speaker: "spk".into(),
        word: format!("w{i}"),
        consonant: "p".into(),
        onset_class: onset,
        vowel: "ɑ".into(),
        vowel_height: VowelHeight::Low,
        duration: 0.1,
        f0_norm: vec![200.0; N_POINTS],
        zf0: None,
        seen: None,
        freq_band: Some(band),
    }
}

fn balanced() -> Outcome {
    let mut tokens = Vec::new();
    for source in ["lj", "tts1", "tts2"] {
        for band in [FreqBand::High, FreqBand::Low] {
            for onset in OnsetClass::TARGETS {
                tokens.extend((0..1200).map(|i| token(source, band, onset, i)));
            }
        }
    }
    let ds = balanced_sample(&tokens, &StrataConfig { n_per_cell: 1000, seed: 1, split: Split::MedianFrequency }).unwrap();
    let counts = ds.cell_counts();
    let per_onset: Vec<usize> = OnsetClass::TARGETS.iter().map(|o| ds.tokens.iter().filter(|t| t.onset_class == *o).count()).collect();
    let pass = counts.len() == 18 && counts.values().all(|&c| c == 1000) && ds.tokens.len() == 18_000 && per_onset.iter().all(|&c| c == 6000);
    outcome(pass, format!("{} cells, {} tokens, per onset {per_onset:?}", counts.len(), ds.tokens.len()))
}

fn exclusions() -> Outcome {
    let candidate = |start: f64, end: f64| Candidate {
        word: "pa".into(),
        speaker: "spk".into(),
        consonant: Interval::new(start - 0.05, start, "p"),
        vowel: Interval::new(start, end, "ɑ"),
        onset_class: OnsetClass::VoicelessObstruent,
        vowel_height: VowelHeight::Low,
        vowel_index: 1,
    };
    // 10 ms frames centred at 5 ms offsets
    let contour = |unvoiced: fn(f64) -> bool| PitchContour {
        frames: (0..100)
            .map(|i| {
                let time = 0.005 + 0.01 * i as f64;
                PitchFrame { time, f0: (!unvoiced(time)).then_some(200.0), strength: 0.9 }
            })
            .collect(),
        floor: 75.0,
        ceiling: 600.0,
        time_step: 0.01,
    };
    let sixty = apply_exclusions(&candidate(0.2, 0.3), &contour(|t| t < 0.26), "s", "a".into());
    let short = apply_exclusions(&candidate(0.2, 0.24), &contour(|_| false), "s", "b".into());
    let kept = apply_exclusions(&candidate(0.2, 0.3), &contour(|t| t < 0.21), "s", "c".into());
    let pass = sixty == Err(Rejection::UnvoicedMajority) && short == Err(Rejection::TooShort) && kept.is_ok();
    let show = |r: &Result<VowelToken, Rejection>| r.as_ref().map_or_else(|e| e.to_string(), |_| "kept".into());
    outcome(pass, format!("60% unvoiced: {}; 40 ms: {}; 100 ms with 10% unvoiced: {}", show(&sixty), show(&short), show(&kept)))
}

fn main() -> ExitCode {
    let criteria: [(&str, f64, fn() -> Outcome); 9] = [
        ("penalized solve matches dense normal equations", 10.0, penalized_solve),
        ("AR1 whitening equals GLS; rho recovered", 10.0, ar1),
        ("smoothing limits: mean at huge lambda, OLS at zero", f64::INFINITY, smoothing_limits),
        ("null simulation", 120.0, null_simulation),
        ("power simulation", 600.0, power_simulation),
        ("pitch tracker on synthetic signals", 5.0, pitch),
        ("pipeline determinism on the mini corpus", f64::INFINITY, determinism),
        ("balanced design cell counts", f64::INFINITY, balanced),
        ("exclusion rules", f64::INFINITY, exclusions),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let clock = Instant::now();
        let o = run();
        let secs = clock.elapsed().as_secs_f64();
        let pass = o.pass && secs < limit;
        failed += !pass as usize;
        let budget = if limit.is_finite() { format!(", limit {limit:.0} s") } else { String::new() };
        println!("{} criterion {}: {name}: {} ({secs:.1} s{budget})", if pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
