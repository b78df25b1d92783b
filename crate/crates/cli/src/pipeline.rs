//! `probe run`: ingestion, stratification, probing and output writing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use segprobe_core::annotation::{decode_textgrid_bytes, parse_frequency_list, parse_pron_dict_with, parse_textgrid, FrequencyTable};
use segprobe_core::gam::RemlOptions;
use segprobe_core::inventory::Inventory;
use segprobe_core::pitch::{read_contour, read_wav, two_pass_extract, Audio, PitchConfig, PitchContour};
use segprobe_core::probe::{run_probe, write_differences, write_metadata, write_smooths, ProbeMode, ProbeReport, ResponseKind};
use segprobe_core::strata::{
    balanced_sample, label_frequency_bands, label_seen_unseen, overlap_with_vocab, split_by_frequency, training_vocabulary,
    FreqBand, StrataConfig, Stratum,
};
use segprobe_core::tokens::{
    apply_exclusions, find_candidates, write_token_table, zscore_by_speaker, CandidateOptions, ExclusionReport, Rejection,
    VowelToken,
};

use crate::config::{PitchInput, RunConfig, Source};
use crate::render::render_figures;

pub const MANIFEST: &str = "manifest.tsv";
const CONTOUR_EXTENSIONS: [&str; 4] = ["f0", "tsv", "csv", "txt"];

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub word_initial_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Complete,
    /// At least one source (or source × stratum model) failed.
    Partial,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Complete => 0,
            RunStatus::Partial => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub output: PathBuf,
    /// Keyed by source or `source|stratum`.
    pub failures: BTreeMap<String, String>,
    pub report: ProbeReport,
}

struct Ingested {
    tokens: Vec<VowelToken>,
    exclusions: ExclusionReport,
    files: usize,
}

/// Runs the whole pipeline. `Err` is a fatal error (exit 1); per-source
/// failures are reported in the outcome.
pub fn run(config_path: &Path, overrides: &RunOverrides) -> Result<RunOutcome> {
    let (mut cfg, text) = RunConfig::load(config_path)?;
    if let Some(seed) = overrides.seed {
        cfg.strata.seed = seed;
    }
    cfg.word_initial_only |= overrides.word_initial_only;
    run_config(&cfg, &text)
}

pub fn run_config(cfg: &RunConfig, config_text: &str) -> Result<RunOutcome> {
    let sources = cfg.validate()?;
    let mode = cfg.mode.probe_mode();
    let pitch_cfg = cfg.pitch.to_config();
    let inventory = match &cfg.inventory {
        Some(p) => Inventory::builtin().with_overrides(&read_text(p)?).with_context(|| format!("in {}", p.display()))?,
        None => Inventory::builtin(),
    };
    let dict = parse_pron_dict_with(&read_text(&cfg.dictionary)?, &inventory)
        .with_context(|| format!("cannot parse dictionary {}", cfg.dictionary.display()))?;
    for (phone, n) in dict.unknown_phones() {
        warn!("dictionary phone \"{phone}\" ({n} uses) is not in the inventory");
    }
    let freq = parse_frequency_list(&read_text(&cfg.frequency)?, &cfg.frequency_word_column, &cfg.frequency_count_column)
        .with_context(|| format!("cannot parse frequency list {}", cfg.frequency.display()))?;
    let vocab = match &cfg.transcripts {
        Some(p) => {
            let v = training_vocabulary(&read_text(p)?);
            if v.is_empty() {
                bail!("transcripts {} contain no words", p.display());
            }
            Some(v)
        }
        None => None,
    };
    let dict_words: BTreeSet<String> = dict.entries.keys().cloned().collect();
    let bands = split_by_frequency(&dict_words, &freq).context("frequency split of the dictionary words")?;
    prepare_output(&cfg.output)?;

    let opts = CandidateOptions {
        phones_tier: &cfg.phones_tier,
        words_tier: &cfg.words_tier,
        word_initial_only: cfg.word_initial_only,
        inventory: &inventory,
    };
    let ingested: Vec<(String, Result<Ingested>)> = sources
        .par_iter()
        .map(|s| (s.name.clone(), ingest_source(s, &opts, &pitch_cfg, mode.kind)))
        .collect();

    let mut failures: BTreeMap<String, String> = BTreeMap::new();
    let mut kept: BTreeMap<String, Ingested> = BTreeMap::new();
    for (name, r) in ingested {
        match r {
            Ok(mut ing) => {
                label_frequency_bands(&mut ing.tokens, &bands);
                if let Some(v) = &vocab {
                    label_seen_unseen(&mut ing.tokens, v);
                }
                info!("source {name}: {} files, {} of {} candidates kept", ing.files, ing.exclusions.kept, ing.exclusions.candidates);
                kept.insert(name, ing);
            }
            Err(e) => {
                warn!("source {name} failed: {e:#}");
                failures.insert(name, format!("{e:#}"));
            }
        }
    }

    let strata_cfg = StrataConfig { n_per_cell: cfg.strata.n_per_cell, seed: cfg.strata.seed, split: mode.split };
    let mut sample_tokens = Vec::new();
    let mut sample_cells = Vec::new();
    let mut unlabelled = BTreeMap::new();
    for (name, ing) in &kept {
        let (labelled, missing): (Vec<&VowelToken>, Vec<&VowelToken>) =
            ing.tokens.iter().filter(|t| t.onset_class.is_target()).partition(|t| Stratum::of(t, mode.split).is_some());
        unlabelled.insert(name.clone(), missing.len());
        let owned: Vec<VowelToken> = labelled.into_iter().cloned().collect();
        match balanced_sample(&owned, &strata_cfg) {
            Ok(ds) => {
                sample_tokens.extend(ds.tokens);
                sample_cells.extend(ds.cells);
            }
            Err(e) => {
                warn!("source {name}: sampling failed: {e}");
                failures.insert(name.clone(), format!("sampling: {e}"));
            }
        }
    }
    let report = if sample_tokens.is_empty() {
        ProbeReport::default()
    } else {
        run_probe(&sample_tokens, mode, &RemlOptions::default())?
    };
    for (key, e) in &report.failures {
        warn!("model {key} failed: {e}");
        failures.insert(key.clone(), format!("model: {e}"));
    }
    if report.sources.is_empty() {
        let detail: Vec<String> = failures.iter().map(|(k, v)| format!("{k}: {v}")).collect();
        bail!("no source produced a report ({})", detail.join("; "));
    }

    let out = &cfg.output;
    let all_tokens: Vec<VowelToken> = kept.values().flat_map(|i| i.tokens.iter().cloned()).collect();
    write(out, "tokens.tsv", &write_token_table(&all_tokens, None))?;
    write(out, "sample.tsv", &write_token_table(&sample_tokens, Some(&sample_cells)))?;
    write(out, "exclusions.tsv", &exclusion_table(&kept))?;
    if let Some(v) = &vocab {
        let mut sets: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (w, b) in &bands {
            sets.entry(b.as_str().to_string()).or_default().insert(w.clone());
        }
        write(out, "overlap.tsv", &overlap_with_vocab(&sets, v).to_tsv())?;
    }
    let figures = render_figures(&report)?;
    for (key, r) in &report.sources {
        let dir = format!("reports/{}/{}", r.source, r.stratum);
        write(out, &format!("{dir}/smooths.tsv"), &write_smooths(r))?;
        write(out, &format!("{dir}/differences.tsv"), &write_differences(r))?;
        write(out, &format!("{dir}/metadata.tsv"), &write_metadata(r))?;
        write(out, &format!("{dir}/model_spec.txt"), &r.model_spec)?;
        let f = &figures[key];
        write(out, &format!("{dir}/figure.svg"), &f.row)?;
        write(out, &format!("{dir}/smooths.svg"), &f.smooths)?;
        write(out, &format!("{dir}/differences.svg"), &f.differences)?;
    }
    let mut fail_tsv = String::from("key\tmessage\n");
    for (k, v) in &failures {
        let _ = writeln!(fail_tsv, "{k}\t{}", v.replace(['\t', '\n'], " "));
    }
    write(out, "failures.tsv", &fail_tsv)?;
    write(out, MANIFEST, &manifest(cfg, config_text, &sources, &kept, &unlabelled, &report, &failures, &bands, &freq))?;

    let status = if failures.is_empty() { RunStatus::Complete } else { RunStatus::Partial };
    Ok(RunOutcome { status, output: out.clone(), failures, report })
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    String::from_utf8(bytes).map_err(|_| anyhow!("{} is not valid UTF-8", path.display()))
}

fn write(out: &Path, rel: &str, content: &str) -> Result<()> {
    let path = out.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))
}

/// Creates the output directory, clearing a previous run's tree. A
/// non-empty directory without a manifest is left alone.
fn prepare_output(out: &Path) -> Result<()> {
    if out.exists() {
        let non_empty = fs::read_dir(out).with_context(|| format!("cannot list {}", out.display()))?.next().is_some();
        if non_empty {
            if !out.join(MANIFEST).is_file() {
                bail!("output directory {} is not empty and holds no {MANIFEST}; refusing to overwrite", out.display());
            }
            fs::remove_dir_all(out).with_context(|| format!("cannot clear {}", out.display()))?;
        }
    }
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))
}

fn sorted_files(dir: &Path, keep: impl Fn(&str) -> bool) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().and_then(|e| e.to_str()).is_some_and(&keep))
        .collect();
    files.sort();
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn find_contour(dir: &Path, stem: &str) -> Result<PathBuf> {
    CONTOUR_EXTENSIONS
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
        .ok_or_else(|| anyhow!("no contour for {stem} in {}", dir.display()))
}

/// Reads, tracks and filters one source. Any unreadable file fails the
/// whole source.
fn ingest_source(src: &Source, opts: &CandidateOptions<'_>, pitch_cfg: &PitchConfig, kind: ResponseKind) -> Result<Ingested> {
    let grids = sorted_files(&src.textgrids, |e| e.eq_ignore_ascii_case("textgrid"))?;
    if grids.is_empty() {
        bail!("no TextGrid files in {}", src.textgrids.display());
    }
    let mut docs = Vec::with_capacity(grids.len());
    for path in &grids {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        let text = decode_textgrid_bytes(&bytes).with_context(|| format!("in {}", path.display()))?;
        let doc = parse_textgrid(&text).with_context(|| format!("in {}", path.display()))?;
        docs.push((stem(path), src.speaker.speaker_for(path), doc));
    }
    let contours: Vec<PitchContour> = match &src.pitch {
        PitchInput::Contours(dir) => docs
            .iter()
            .map(|(stem, _, _)| {
                let path = find_contour(dir, stem)?;
                read_contour(&read_text(&path)?, pitch_cfg).with_context(|| format!("in {}", path.display()))
            })
            .collect::<Result<_>>()?,
        PitchInput::Audio(dir) => track_audio(dir, &docs.iter().map(|(s, sp, _)| (s.clone(), sp.clone())).collect::<Vec<_>>(), pitch_cfg)?,
    };

    let mut exclusions = ExclusionReport::default();
    let mut tokens = Vec::new();
    for ((stem, speaker, doc), contour) in docs.iter().zip(&contours) {
        let scan = find_candidates(doc, speaker, opts).with_context(|| format!("in {stem}"))?;
        exclusions.candidates += scan.candidates.len() + scan.no_onset;
        for _ in 0..scan.no_onset {
            exclusions.reject(Rejection::NoOnset);
        }
        for c in &scan.candidates {
            match apply_exclusions(c, contour, &src.name, format!("{}/{stem}/{}", src.name, c.vowel_index)) {
                Ok(t) => {
                    exclusions.kept += 1;
                    tokens.push(t);
                }
                Err(r) => exclusions.reject(r),
            }
        }
    }
    if tokens.is_empty() {
        bail!("no vowel token survived exclusion");
    }
    match zscore_by_speaker(&mut tokens) {
        Ok(()) => {}
        Err(e) if kind == ResponseKind::MultiSpeakerZ => return Err(e).context("z-scoring"),
        Err(e) => warn!("source {}: z-scores left empty: {e}", src.name),
    }
    tokens.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(Ingested { tokens, exclusions, files: grids.len() })
}

/// Two-pass tracking of every file, grouped by speaker.
fn track_audio(dir: &Path, files: &[(String, String)], pitch_cfg: &PitchConfig) -> Result<Vec<PitchContour>> {
    let mut by_speaker: BTreeMap<String, Vec<(usize, Audio)>> = BTreeMap::new();
    for (i, (stem, speaker)) in files.iter().enumerate() {
        let path = dir.join(format!("{stem}.wav"));
        let audio = read_wav(&path).with_context(|| format!("cannot read {}", path.display()))?;
        by_speaker.entry(speaker.clone()).or_default().push((i, audio));
    }
    let index: BTreeMap<String, Vec<usize>> = by_speaker.iter().map(|(s, v)| (s.clone(), v.iter().map(|(i, _)| *i).collect())).collect();
    let audio: BTreeMap<String, Vec<Audio>> = by_speaker.into_iter().map(|(s, v)| (s, v.into_iter().map(|(_, a)| a).collect())).collect();
    let tracked = two_pass_extract(&audio, pitch_cfg);
    for w in &tracked.warnings {
        warn!("{w}");
    }
    let mut out: Vec<Option<PitchContour>> = vec![None; files.len()];
    for (speaker, results) in tracked.contours {
        for (r, &i) in results.into_iter().zip(&index[&speaker]) {
            out[i] = Some(r.with_context(|| format!("tracking {}.wav", files[i].0))?);
        }
    }
    out.into_iter().enumerate().map(|(i, c)| c.ok_or_else(|| anyhow!("no contour for {}", files[i].0))).collect()
}

fn exclusion_table(kept: &BTreeMap<String, Ingested>) -> String {
    let mut out = String::from("source\tfiles\tcandidates\tkept");
    for r in Rejection::ALL {
        let _ = write!(out, "\t{r}");
    }
    out.push('\n');
    for (name, ing) in kept {
        let e = &ing.exclusions;
        let _ = write!(out, "{name}\t{}\t{}\t{}", ing.files, e.candidates, e.kept);
        for r in Rejection::ALL {
            let _ = write!(out, "\t{}", e.count(r));
        }
        out.push('\n');
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn manifest(
    cfg: &RunConfig,
    config_text: &str,
    sources: &[Source],
    kept: &BTreeMap<String, Ingested>,
    unlabelled: &BTreeMap<String, usize>,
    report: &ProbeReport,
    failures: &BTreeMap<String, String>,
    bands: &BTreeMap<String, FreqBand>,
    freq: &FrequencyTable,
) -> String {
    let mut m = String::from("key\tvalue\n");
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(m, "{k}\t{v}");
    };
    kv("tool", env!("CARGO_PKG_NAME").into());
    kv("tool_version", env!("CARGO_PKG_VERSION").into());
    kv("core_version", segprobe_core::VERSION.into());
    kv("config_sha256", hex_digest(config_text.as_bytes()));
    kv("seed", cfg.strata.seed.to_string());
    kv("n_per_cell", cfg.strata.n_per_cell.to_string());
    let mode: ProbeMode = cfg.mode.probe_mode();
    kv("response", mode.kind.as_str().into());
    kv("split", format!("{:?}", cfg.mode.split).to_lowercase());
    kv("word_initial_only", cfg.word_initial_only.to_string());
    kv("frequency_entries", freq.len().to_string());
    kv("dictionary_words", bands.len().to_string());
    kv("high_band_words", bands.values().filter(|b| **b == FreqBand::High).count().to_string());
    for s in sources {
        let status = if failures.contains_key(&s.name) { "failed" } else { "ok" };
        kv(&format!("source:{}", s.name), status.into());
        if let Some(ing) = kept.get(&s.name) {
            kv(&format!("tokens:{}", s.name), ing.tokens.len().to_string());
            kv(&format!("unlabelled:{}", s.name), unlabelled.get(&s.name).copied().unwrap_or(0).to_string());
        }
    }
    for key in report.sources.keys() {
        kv(&format!("report:{key}"), "ok".into());
    }
    for key in report.failures.keys() {
        kv(&format!("report:{key}"), "failed".into());
    }
    m
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}
