//! Run configuration, read from a TOML file. Relative paths resolve
//! against the directory holding the config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use segprobe_core::pitch::PitchConfig;
use segprobe_core::probe::{ProbeMode, ResponseKind};
use segprobe_core::strata::Split;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output: PathBuf,
    pub dictionary: PathBuf,
    pub frequency: PathBuf,
    #[serde(default = "default_word_column")]
    pub frequency_word_column: String,
    #[serde(default = "default_count_column")]
    pub frequency_count_column: String,
    pub transcripts: Option<PathBuf>,
    /// Optional phone-inventory override table.
    pub inventory: Option<PathBuf>,
    #[serde(default = "default_phones_tier")]
    pub phones_tier: String,
    #[serde(default = "default_words_tier")]
    pub words_tier: String,
    #[serde(default)]
    pub word_initial_only: bool,
    #[serde(default)]
    pub mode: ModeConfig,
    pub strata: StrataSection,
    #[serde(default)]
    pub pitch: PitchSection,
    #[serde(rename = "source")]
    pub sources: Vec<SourceConfig>,
}

fn default_word_column() -> String {
    "Word".into()
}
fn default_count_column() -> String {
    "FREQcount".into()
}
fn default_phones_tier() -> String {
    "phones".into()
}
fn default_words_tier() -> String {
    "words".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    #[default]
    SingleSpeakerHz,
    MultiSpeakerZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitConfig {
    #[default]
    Frequency,
    Seen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    #[serde(default)]
    pub response: Response,
    #[serde(default)]
    pub split: SplitConfig,
}

impl ModeConfig {
    pub fn probe_mode(&self) -> ProbeMode {
        ProbeMode {
            kind: match self.response {
                Response::SingleSpeakerHz => ResponseKind::SingleSpeakerHz,
                Response::MultiSpeakerZ => ResponseKind::MultiSpeakerZ,
            },
            split: match self.split {
                SplitConfig::Frequency => Split::MedianFrequency,
                SplitConfig::Seen => Split::SeenUnseen,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrataSection {
    pub n_per_cell: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    1
}

/// Tracker settings; unset fields keep the tracker defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PitchSection {
    pub floor: Option<f64>,
    pub ceiling: Option<f64>,
    pub time_step: Option<f64>,
    pub voicing_threshold: Option<f64>,
    pub window_factor: Option<f64>,
    pub silence_threshold: Option<f64>,
    pub octave_cost: Option<f64>,
}

impl PitchSection {
    pub fn to_config(&self) -> PitchConfig {
        let d = PitchConfig::default();
        PitchConfig {
            floor: self.floor.unwrap_or(d.floor),
            ceiling: self.ceiling.unwrap_or(d.ceiling),
            time_step: self.time_step.unwrap_or(d.time_step),
            voicing_threshold: self.voicing_threshold.unwrap_or(d.voicing_threshold),
            window_factor: self.window_factor.unwrap_or(d.window_factor),
            silence_threshold: self.silence_threshold.unwrap_or(d.silence_threshold),
            octave_cost: self.octave_cost.unwrap_or(d.octave_cost),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub name: String,
    pub textgrids: PathBuf,
    /// Precomputed contours named `<stem>.f0`, `.tsv`, `.csv` or `.txt`.
    pub contours: Option<PathBuf>,
    /// WAV files named `<stem>.wav`, tracked in two passes per speaker.
    pub audio: Option<PathBuf>,
    /// `stem`, `prefix:<separator>`, `directory` or `fixed:<id>`.
    #[serde(default = "default_speaker_rule")]
    pub speaker: String,
}

fn default_speaker_rule() -> String {
    "prefix:_".into()
}

/// How a speaker id is derived from an annotation file path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpeakerRule {
    Stem,
    Prefix(String),
    Directory,
    Fixed(String),
}

impl SpeakerRule {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.split_once(':') {
            None if s == "stem" => SpeakerRule::Stem,
            None if s == "directory" => SpeakerRule::Directory,
            Some(("prefix", sep)) if !sep.is_empty() => SpeakerRule::Prefix(sep.into()),
            Some(("fixed", id)) if !id.is_empty() => SpeakerRule::Fixed(id.into()),
            _ => bail!("unknown speaker rule \"{s}\" (expected stem, prefix:<sep>, directory or fixed:<id>)"),
        })
    }

    pub fn speaker_for(&self, path: &Path) -> String {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        match self {
            SpeakerRule::Stem => stem,
            SpeakerRule::Prefix(sep) => stem.split(sep.as_str()).next().unwrap_or(&stem).to_string(),
            SpeakerRule::Directory => {
                path.parent().and_then(Path::file_name).map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            }
            SpeakerRule::Fixed(id) => id.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum PitchInput {
    Contours(PathBuf),
    Audio(PathBuf),
}

/// A source with resolved paths.
#[derive(Debug, Clone)]
pub struct Source {
    pub name: String,
    pub textgrids: PathBuf,
    pub pitch: PitchInput,
    pub speaker: SpeakerRule,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid run config")
    }

    /// Reads the config and resolves its relative paths.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        Ok((cfg, text))
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output);
        fix(&mut self.dictionary);
        fix(&mut self.frequency);
        self.transcripts.iter_mut().for_each(fix);
        self.inventory.iter_mut().for_each(fix);
        for s in &mut self.sources {
            fix(&mut s.textgrids);
            s.contours.iter_mut().for_each(fix);
            s.audio.iter_mut().for_each(fix);
        }
    }

    /// Checks structure and that every input path exists.
    pub fn validate(&self) -> Result<Vec<Source>> {
        if self.sources.is_empty() {
            bail!("config lists no sources");
        }
        if self.strata.n_per_cell == 0 {
            bail!("strata.n_per_cell must be at least 1");
        }
        self.pitch.to_config().validate()?;
        let mut names = BTreeSet::new();
        for s in &self.sources {
            if s.name.is_empty() || s.name.contains(['/', '\\', '|']) {
                bail!("source name \"{}\" is empty or contains a path separator or '|'", s.name);
            }
            if !names.insert(s.name.as_str()) {
                bail!("source name \"{}\" is used twice", s.name);
            }
        }
        if self.mode.split == SplitConfig::Seen && self.transcripts.is_none() {
            bail!("the seen split needs a transcripts path");
        }
        let must_exist = |p: &Path, what: &str| -> Result<()> {
            if !p.exists() {
                bail!("{what} {} does not exist", p.display());
            }
            Ok(())
        };
        must_exist(&self.dictionary, "dictionary")?;
        must_exist(&self.frequency, "frequency list")?;
        if let Some(t) = &self.transcripts {
            must_exist(t, "transcripts")?;
        }
        if let Some(i) = &self.inventory {
            must_exist(i, "inventory")?;
        }
        self.sources
            .iter()
            .map(|s| {
                if !s.textgrids.is_dir() {
                    bail!("textgrid directory {} of source {} does not exist", s.textgrids.display(), s.name);
                }
                let pitch = match (&s.contours, &s.audio) {
                    (Some(c), None) => PitchInput::Contours(c.clone()),
                    (None, Some(a)) => PitchInput::Audio(a.clone()),
                    _ => bail!("source {} needs exactly one of contours or audio", s.name),
                };
                let dir = match &pitch {
                    PitchInput::Contours(d) | PitchInput::Audio(d) => d,
                };
                if !dir.is_dir() {
                    bail!("pitch directory {} of source {} does not exist", dir.display(), s.name);
                }
                Ok(Source { name: s.name.clone(), textgrids: s.textgrids.clone(), pitch, speaker: SpeakerRule::parse(&s.speaker)? })
            })
            .collect()
    }
}
