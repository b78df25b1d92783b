//! Synthetic corpora with known onset effects, for self-verification.
//!
//! Each token trajectory on the 21-point grid is
//! `baseline(t) + effect(t) + word curve + speaker curve + AR(1) noise`,
//! where the onset effect decays linearly from `offset` at t = 0 to zero at
//! t = `decay`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use segprobe_core::annotation::{serialize_textgrid, AnnotationDoc, Interval, IntervalTier, Tier};
use segprobe_core::inventory::{OnsetClass, VowelHeight};
use segprobe_core::pitch::{write_contour, PitchContour, PitchFrame};
use segprobe_core::strata::{FreqBand, Stratum};
use segprobe_core::tokens::{time_prop, VowelToken, N_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Effect {
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "default_decay")]
    pub decay: f64,
}

fn default_decay() -> f64 {
    0.5
}

impl Default for Effect {
    fn default() -> Self {
        Self { offset: 0.0, decay: default_decay() }
    }
}

impl Effect {
    pub fn at(&self, t: f64) -> f64 {
        self.offset * (1.0 - t / self.decay).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Effects {
    #[serde(default)]
    pub voiceless: Effect,
    #[serde(default)]
    pub voiced: Effect,
    #[serde(default)]
    pub sonorant: Effect,
}

impl Effects {
    pub fn of(&self, onset: OnsetClass) -> Effect {
        match onset {
            OnsetClass::VoicelessObstruent => self.voiceless,
            OnsetClass::VoicedObstruent => self.voiced,
            _ => self.sonorant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSource {
    pub name: String,
    /// Overrides the top-level effects for this source.
    pub effects: Option<Effects>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Tokens per (source, stratum, onset) cell.
    pub n_tokens: usize,
    #[serde(default = "default_sources")]
    pub sources: Vec<SynthSource>,
    /// Any of high, low, seen, unseen.
    #[serde(default = "default_strata")]
    pub strata: Vec<String>,
    #[serde(default = "default_speakers")]
    pub speakers: usize,
    /// Distinct words per cell in familiar strata (high, seen).
    #[serde(default = "default_words")]
    pub words_per_cell: usize,
    /// Distinct words per cell in the other strata; defaults to two thirds
    /// of `n_tokens`, so most words occur once or twice.
    pub rare_words_per_cell: Option<usize>,
    #[serde(default = "default_noise")]
    pub noise_sd: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "default_curve_sd")]
    pub word_sd: f64,
    #[serde(default = "default_curve_sd")]
    pub speaker_sd: f64,
    /// Baseline value at the vowel start and end.
    #[serde(default = "default_baseline")]
    pub baseline: [f64; 2],
    #[serde(default)]
    pub effects: Effects,
    /// `f0_hz = hz_base + hz_scale * value`; `zf0 = value`.
    #[serde(default = "default_hz_base")]
    pub hz_base: f64,
    #[serde(default = "default_hz_scale")]
    pub hz_scale: f64,
}

fn default_seed() -> u64 {
    1
}
fn default_sources() -> Vec<SynthSource> {
    vec![SynthSource { name: "synth".into(), effects: None }]
}
fn default_strata() -> Vec<String> {
    vec!["high".into()]
}
fn default_speakers() -> usize {
    1
}
fn default_words() -> usize {
    10
}
fn default_noise() -> f64 {
    1.0
}
fn default_curve_sd() -> f64 {
    0.3
}
fn default_baseline() -> [f64; 2] {
    [0.5, -0.5]
}
fn default_hz_base() -> f64 {
    200.0
}
fn default_hz_scale() -> f64 {
    25.0
}

impl SynthSpec {
    pub fn new(n_tokens: usize, seed: u64) -> Self {
        Self {
            seed,
            n_tokens,
            sources: default_sources(),
            strata: default_strata(),
            speakers: default_speakers(),
            words_per_cell: default_words(),
            rare_words_per_cell: None,
            noise_sd: default_noise(),
            rho: 0.0,
            word_sd: default_curve_sd(),
            speaker_sd: default_curve_sd(),
            baseline: default_baseline(),
            effects: Effects::default(),
            hz_base: default_hz_base(),
            hz_scale: default_hz_scale(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SynthSpec = toml::from_str(text).context("invalid synth spec")?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn strata(&self) -> Result<Vec<Stratum>> {
        self.strata.iter().map(|s| s.parse::<Stratum>().map_err(anyhow::Error::from)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_tokens >= 1, "n_tokens must be at least 1");
        ensure!(self.noise_sd > 0.0, "noise_sd must be positive");
        ensure!(self.rho.abs() < 1.0, "rho must lie in (-1, 1)");
        ensure!(self.speakers >= 1 && self.words_per_cell >= 1, "speakers and words_per_cell must be at least 1");
        ensure!(self.word_sd >= 0.0 && self.speaker_sd >= 0.0, "curve sds must be non-negative");
        ensure!(!self.sources.is_empty(), "at least one source is required");
        let mut names: Vec<&str> = self.sources.iter().map(|s| s.name.as_str()).collect();
        names.sort();
        ensure!(names.windows(2).all(|w| w[0] != w[1]), "source names must be unique");
        ensure!(!self.strata.is_empty(), "at least one stratum is required");
        self.strata()?;
        for s in &self.sources {
            let e = s.effects.unwrap_or(self.effects);
            for onset in OnsetClass::TARGETS {
                let d = e.of(onset).decay;
                if !(d > 0.0 && d <= 1.0) {
                    bail!("decay proportion {d} for {onset} in source {} is not in (0, 1]", s.name);
                }
            }
        }
        Ok(())
    }

    fn words_in(&self, stratum: Stratum) -> usize {
        if stratum.is_familiar() {
            self.words_per_cell
        } else {
            self.rare_words_per_cell.unwrap_or((2 * self.n_tokens).div_ceil(3)).max(1)
        }
    }
}

const CONSONANTS: [(OnsetClass, [&str; 4]); 3] = [
    (OnsetClass::Sonorant, ["m", "n", "l", "w"]),
    (OnsetClass::VoicedObstruent, ["b", "d", "g", "z"]),
    (OnsetClass::VoicelessObstruent, ["p", "t", "k", "s"]),
];
const VOWELS: [(VowelHeight, &str); 3] = [(VowelHeight::High, "i"), (VowelHeight::Mid, "ɛ"), (VowelHeight::Low, "æ")];

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn rng_for(seed: u64, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(key))
}

/// A random quadratic in the shifted Legendre basis:
/// `a0 + a1 (2t − 1) + a2 (6t² − 6t + 1)`.
fn random_curve(rng: &mut ChaCha8Rng, sd: f64) -> [f64; 3] {
    if sd == 0.0 {
        return [0.0; 3];
    }
    let n = Normal::new(0.0, sd).expect("sd checked");
    [n.sample(rng), n.sample(rng), n.sample(rng)]
}

fn eval_curve(c: &[f64; 3], t: f64) -> f64 {
    c[0] + c[1] * (2.0 * t - 1.0) + c[2] * (6.0 * t * t - 6.0 * t + 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordEntry {
    pub word: String,
    pub consonant: String,
    pub vowel: String,
    pub stratum: Stratum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub tokens: Vec<VowelToken>,
    pub words: BTreeMap<String, WordEntry>,
}

/// Generates the tokens of every cell. Each cell, word and speaker draws
/// from its own generator keyed by the seed and the cell or item name.
pub fn synth_tokens(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let strata = spec.strata()?;
    let noise = Normal::new(0.0, spec.noise_sd).expect("validated");
    let innov_sd = spec.noise_sd * (1.0 - spec.rho * spec.rho).sqrt();
    let innov = Normal::new(0.0, innov_sd).expect("validated");
    let mut tokens = Vec::new();
    let mut words = BTreeMap::new();
    for src in &spec.sources {
        let effects = src.effects.unwrap_or(spec.effects);
        let speaker_curves: Vec<[f64; 3]> =
            (0..spec.speakers).map(|s| random_curve(&mut rng_for(spec.seed, &format!("speaker/{}/{s}", src.name)), spec.speaker_sd)).collect();
        for &stratum in &strata {
            for (onset, consonants) in CONSONANTS {
                let n_words = spec.words_in(stratum);
                let cell = format!("{}/{stratum}/{onset}", src.name);
                let entries: Vec<WordEntry> = (0..n_words)
                    .map(|w| {
                        let (_, vowel) = VOWELS[w % 3];
                        let consonant = consonants[(w / 3) % 4];
                        WordEntry { word: format!("{consonant}{vowel}{}{w:03}", &stratum.as_str()[..1]), consonant: consonant.into(), vowel: vowel.into(), stratum }
                    })
                    .collect();
                let curves: Vec<[f64; 3]> =
                    entries.iter().map(|e| random_curve(&mut rng_for(spec.seed, &format!("word/{}/{}", src.name, e.word)), spec.word_sd)).collect();
                let mut rng = rng_for(spec.seed, &cell);
                let effect = effects.of(onset);
                for i in 0..spec.n_tokens {
                    let w = i % n_words;
                    let entry = &entries[w];
                    let speaker = i % spec.speakers;
                    let mut e = noise.sample(&mut rng);
                    let mut z = Vec::with_capacity(N_POINTS);
                    for j in 0..N_POINTS {
                        if j > 0 {
                            e = spec.rho * e + innov.sample(&mut rng);
                        }
                        let t = time_prop(j);
                        let base = spec.baseline[0] + (spec.baseline[1] - spec.baseline[0]) * t;
                        z.push(base + effect.at(t) + eval_curve(&curves[w], t) + eval_curve(&speaker_curves[speaker], t) + e);
                    }
                    let duration = 0.08 + 0.12 * rng.random::<f64>();
                    let height = VOWELS.iter().find(|(_, v)| *v == entry.vowel).expect("own table").0;
                    tokens.push(VowelToken {
                        id: format!("{cell}/{i:05}"),
                        source: src.name.clone(),
                        speaker: format!("spk{speaker}"),
                        word: entry.word.clone(),
                        consonant: entry.consonant.clone(),
                        onset_class: onset,
                        vowel: entry.vowel.clone(),
                        vowel_height: height,
                        duration: (duration * 1000.0).round() / 1000.0,
                        f0_norm: z.iter().map(|v| spec.hz_base + spec.hz_scale * v).collect(),
                        zf0: Some(z),
                        seen: matches!(stratum, Stratum::Seen | Stratum::Unseen).then_some(stratum == Stratum::Seen),
                        freq_band: match stratum {
                            Stratum::High => Some(FreqBand::High),
                            Stratum::Low => Some(FreqBand::Low),
                            _ => None,
                        },
                    });
                }
                for e in entries {
                    words.insert(e.word.clone(), e);
                }
            }
        }
    }
    Ok(SynthCorpus { tokens, words })
}

const LEAD: f64 = 0.1;
const CONSONANT_DUR: f64 = 0.06;
const STEP: f64 = 0.01;

/// Writes a corpus of TextGrids and imported-contour files, with a
/// dictionary, frequency list and training transcripts. Tokens of each
/// source are spread over `files_per_source` files named
/// `{speaker}_{nnn}`.
pub fn write_corpus(corpus: &SynthCorpus, dir: &Path, files_per_source: usize) -> Result<()> {
    ensure!(files_per_source >= 1, "files_per_source must be at least 1");
    let mut by_source: BTreeMap<&str, Vec<&VowelToken>> = BTreeMap::new();
    for t in &corpus.tokens {
        by_source.entry(&t.source).or_default().push(t);
    }
    for (source, toks) in by_source {
        let tg_dir = dir.join(source).join("textgrids");
        let f0_dir = dir.join(source).join("contours");
        fs::create_dir_all(&tg_dir)?;
        fs::create_dir_all(&f0_dir)?;
        let mut files: BTreeMap<(String, usize), Vec<&VowelToken>> = BTreeMap::new();
        for (i, t) in toks.iter().enumerate() {
            files.entry((t.speaker.clone(), i % files_per_source)).or_default().push(t);
        }
        for ((speaker, idx), toks) in files {
            let stem = format!("{speaker}_{idx:03}");
            let (doc, contour) = render_file(&toks);
            fs::write(tg_dir.join(format!("{stem}.TextGrid")), serialize_textgrid(&doc)?)?;
            fs::write(f0_dir.join(format!("{stem}.f0")), write_contour(&contour))?;
        }
    }
    let mut dict = String::new();
    let mut freq = String::from("Word\tFREQcount\n");
    let mut transcripts = String::new();
    for (i, e) in corpus.words.values().enumerate() {
        let _ = writeln!(dict, "{}\t{} {}", e.word, e.consonant, e.vowel);
        let count = if e.stratum.is_familiar() { 1000 + i } else { 1 + i % 5 };
        let _ = writeln!(freq, "{}\t{count}", e.word);
        if e.stratum.is_familiar() {
            let _ = writeln!(transcripts, "u{i:05}|{} said.|{} said.", e.word, e.word);
        }
    }
    fs::write(dir.join("dictionary.txt"), dict)?;
    fs::write(dir.join("frequency.tsv"), freq)?;
    fs::write(dir.join("transcripts.txt"), transcripts)?;
    Ok(())
}

fn round_ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

/// Lays tokens out as consecutive consonant–vowel words after a short
/// silence; contour frames inside vowels carry the token trajectory.
fn render_file(tokens: &[&VowelToken]) -> (AnnotationDoc, PitchContour) {
    let mut phones = vec![Interval::new(0.0, LEAD, "")];
    let mut words = vec![Interval::new(0.0, LEAD, "")];
    let mut t = LEAD;
    let mut vowels = Vec::new();
    for tok in tokens {
        let c_end = round_ms(t + CONSONANT_DUR);
        let v_end = round_ms(c_end + tok.duration);
        phones.push(Interval::new(t, c_end, tok.consonant.clone()));
        phones.push(Interval::new(c_end, v_end, tok.vowel.clone()));
        words.push(Interval::new(t, v_end, tok.word.clone()));
        vowels.push((c_end, v_end, *tok));
        t = v_end;
    }
    let end = round_ms(t + LEAD);
    phones.push(Interval::new(t, end, ""));
    words.push(Interval::new(t, end, ""));
    let tier = |name: &str, intervals| Tier::Interval(IntervalTier { name: name.into(), xmin: 0.0, xmax: end, intervals });
    let doc = AnnotationDoc { xmin: 0.0, xmax: end, tiers: vec![tier("words", words), tier("phones", phones)] };

    let n_frames = ((end - STEP) / STEP).floor() as usize + 1;
    let mut frames = Vec::with_capacity(n_frames);
    let mut v = 0;
    for i in 0..n_frames {
        let time = round_ms(0.5 * STEP + i as f64 * STEP);
        while v < vowels.len() && vowels[v].1 <= time {
            v += 1;
        }
        let f0 = vowels.get(v).filter(|(s, e, _)| *s <= time && time < *e).map(|(s, e, tok)| {
            let u = (time - s) / (e - s) * (N_POINTS - 1) as f64;
            let j = (u.floor() as usize).min(N_POINTS - 2);
            let frac = u - j as f64;
            let hz = tok.f0_norm[j] + frac * (tok.f0_norm[j + 1] - tok.f0_norm[j]);
            (hz * 1e6).round() / 1e6
        });
        frames.push(PitchFrame { time, f0, strength: if f0.is_some() { 0.9 } else { 0.0 } });
    }
    (doc, PitchContour { frames, floor: 50.0, ceiling: 800.0, time_step: STEP })
}
