//! Token generator shared by the probe-level tests.

#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use segprobe_core::inventory::{OnsetClass, VowelHeight};
use segprobe_core::strata::FreqBand;
use segprobe_core::tokens::{time_prop, VowelToken, N_POINTS};

pub const ONSETS: [(OnsetClass, [&str; 2]); 3] =
    [(OnsetClass::Sonorant, ["m", "n"]), (OnsetClass::VoicedObstruent, ["b", "d"]), (OnsetClass::VoicelessObstruent, ["p", "t"])];
pub const HEIGHTS: [(VowelHeight, &str); 3] = [(VowelHeight::High, "i"), (VowelHeight::Mid, "e"), (VowelHeight::Low, "a")];

pub struct Gen {
    pub seed: u64,
    pub source: &'static str,
    pub per_onset: usize,
    pub words_per_onset: usize,
    pub noise_sd: f64,
    pub word_sd: f64,
    /// Hz added to the onset at proportion `t`.
    pub effect: fn(OnsetClass, f64) -> f64,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Self { seed, source: "s", per_onset: 60, words_per_onset: 6, noise_sd: 4.0, word_sd: 3.0, effect: |_, _| 0.0 }
    }

    pub fn tokens(&self) -> Vec<VowelToken> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise = Normal::new(0.0, self.noise_sd).unwrap();
        let word = Normal::new(0.0, self.word_sd.max(1e-12)).unwrap();
        let mut out = Vec::new();
        for (onset, consonants) in ONSETS {
            let offsets: Vec<(f64, f64)> = (0..self.words_per_onset).map(|_| (word.sample(&mut rng), word.sample(&mut rng))).collect();
            for i in 0..self.per_onset {
                let w = i % self.words_per_onset;
                let (height, vowel) = HEIGHTS[w % 3];
                let consonant = consonants[w % 2];
                let (a, b) = offsets[w];
                let f0_norm = (0..N_POINTS)
                    .map(|j| {
                        let t = time_prop(j);
                        210.0 - 20.0 * t + (self.effect)(onset, t) + a + b * (t - 0.5) + noise.sample(&mut rng)
                    })
                    .collect();
                out.push(VowelToken {
                    id: format!("{}/{onset}/{i:04}", self.source),
                    source: self.source.into(),
                    speaker: "spk".into(),
                    word: format!("{consonant}{vowel}{w}"),
                    consonant: consonant.into(),
                    onset_class: onset,
                    vowel: vowel.into(),
                    vowel_height: height,
                    duration: 0.1,
                    f0_norm,
                    zf0: None,
                    seen: None,
                    freq_band: Some(FreqBand::High),
                });
            }
        }
        out
    }
}
