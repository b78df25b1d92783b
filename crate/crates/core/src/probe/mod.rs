//! Onset-class probe: the per-source additive model, per-onset smooths and
//! pairwise difference smooths with significance intervals.

mod report;

use std::collections::BTreeMap;

use nalgebra::DVector;
use rayon::prelude::*;
use thiserror::Error;

pub use report::{parse_metadata, write_differences, write_metadata, write_smooths};

use crate::gam::{contrast_curve, fit_model_with, Ar1, Curve, DataFrame, FittedModel, GamError, ModelSpec, RemlOptions, TermSpec, INTERCEPT};
use crate::inventory::{OnsetClass, VowelHeight};
use crate::strata::{Split, Stratum};
use crate::tokens::{time_prop, VowelToken, N_POINTS};

pub const GRID_POINTS: usize = 100;
pub const LEVEL: f64 = 0.95;

/// Column names of the model data frame.
pub mod cols {
    pub const F0_HZ: &str = "f0_hz";
    pub const ZF0: &str = "zf0";
    pub const TIME: &str = "time";
    pub const ONSET: &str = "onset_type";
    pub const WORD: &str = "word";
    pub const HEIGHT: &str = "vowel_height";
    pub const CONSONANT: &str = "consonant";
    pub const SPEAKER: &str = "speaker";
    pub const START: &str = "start_event";
}

/// Pairs reported for every source, as (A, B) for A − B.
pub const PAIRS: [(OnsetClass, OnsetClass); 3] = [
    (OnsetClass::VoicelessObstruent, OnsetClass::Sonorant),
    (OnsetClass::VoicedObstruent, OnsetClass::Sonorant),
    (OnsetClass::VoicelessObstruent, OnsetClass::VoicedObstruent),
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbeError {
    #[error(transparent)]
    Model(#[from] GamError),
    #[error("onset class \"{0}\" is not a model level")]
    UnknownOnset(String),
    #[error("no tokens")]
    Empty,
    #[error("token {0} lacks z-scored values")]
    MissingZ(String),
    #[error("token {0} lacks a stratum label")]
    Unlabelled(String),
    #[error("report: {0}")]
    Report(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    /// Raw Hz, no speaker terms.
    SingleSpeakerHz,
    /// Per-speaker z-scores with speaker factor smooths.
    MultiSpeakerZ,
}

impl ResponseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ResponseKind::SingleSpeakerHz => "single_speaker_hz",
            ResponseKind::MultiSpeakerZ => "multi_speaker_z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeMode {
    pub kind: ResponseKind,
    pub split: Split,
}

/// The model for one stratum. Familiar strata (high frequency, seen) model
/// words with a factor smooth; the others with a random intercept.
pub fn build_probe_spec(kind: ResponseKind, stratum: Stratum) -> ModelSpec {
    let k = 5;
    let mut terms = vec![
        TermSpec::parametric(cols::ONSET),
        TermSpec::smooth(cols::TIME, k, 2),
        TermSpec::by_smooth(cols::TIME, cols::ONSET, k, 2),
        if stratum.is_familiar() { TermSpec::factor_smooth(cols::TIME, cols::WORD, k, 1) } else { TermSpec::random(cols::WORD) },
        TermSpec::factor_smooth(cols::TIME, cols::HEIGHT, k, 1),
        TermSpec::random(cols::CONSONANT),
    ];
    let response = match kind {
        ResponseKind::SingleSpeakerHz => cols::F0_HZ,
        ResponseKind::MultiSpeakerZ => {
            terms.push(TermSpec::factor_smooth(cols::TIME, cols::SPEAKER, k, 1));
            terms.push(TermSpec::factor_smooth_by(cols::TIME, cols::SPEAKER, cols::ONSET, k, 1));
            cols::ZF0
        }
    };
    ModelSpec { response: response.into(), terms, ar1: Ar1::Estimate, series_start: Some(cols::START.into()) }
}

fn onset_levels() -> Vec<String> {
    OnsetClass::TARGETS.iter().map(|o| o.as_str().to_string()).collect()
}

/// Long-format model frame: one row per (token, normalized point).
pub fn tokens_to_frame(tokens: &[VowelToken], kind: ResponseKind) -> Result<DataFrame, ProbeError> {
    if tokens.is_empty() {
        return Err(ProbeError::Empty);
    }
    let n = tokens.len() * N_POINTS;
    let rep = |f: &dyn Fn(&VowelToken) -> String| -> Vec<String> {
        tokens.iter().flat_map(|t| std::iter::repeat_n(f(t), N_POINTS)).collect()
    };
    let mut frame = DataFrame::new(n);
    frame.add_numeric(cols::TIME, (0..n).map(|i| time_prop(i % N_POINTS)).collect())?;
    frame.add_flag(cols::START, (0..n).map(|i| i % N_POINTS == 0).collect())?;
    frame.add_numeric(cols::F0_HZ, tokens.iter().flat_map(|t| t.f0_norm.iter().copied()).collect())?;
    if kind == ResponseKind::MultiSpeakerZ {
        let mut z = Vec::with_capacity(n);
        for t in tokens {
            z.extend(t.zf0.as_ref().ok_or_else(|| ProbeError::MissingZ(t.id.clone()))?);
        }
        frame.add_numeric(cols::ZF0, z)?;
    }
    frame.add_factor_with_levels(cols::ONSET, &rep(&|t| t.onset_class.as_str().into()), &onset_levels())?;
    let heights: Vec<String> = [VowelHeight::High, VowelHeight::Mid, VowelHeight::Low].iter().map(|h| h.as_str().to_string()).collect();
    frame.add_factor_with_levels(cols::HEIGHT, &rep(&|t| t.vowel_height.as_str().into()), &heights)?;
    frame.add_factor(cols::WORD, &rep(&|t| t.word.clone()))?;
    frame.add_factor(cols::CONSONANT, &rep(&|t| t.consonant.clone()))?;
    frame.add_factor(cols::SPEAKER, &rep(&|t| t.speaker.clone()))?;
    Ok(frame)
}

/// Evenly spaced proportions 0, …, 1.
pub fn grid() -> Vec<f64> {
    (0..GRID_POINTS).map(|j| j as f64 / (GRID_POINTS - 1) as f64).collect()
}

fn time_values(model: &FittedModel) -> Result<Vec<f64>, ProbeError> {
    let t = &model.layout.terms[model.layout.term_index(&format!("s({})", cols::TIME))?];
    let (lo, hi) = t.covariate_range;
    Ok(grid().iter().map(|g| lo + g * (hi - lo)).collect())
}

fn onset_rows(model: &FittedModel, onset: OnsetClass, include: &[&str]) -> Result<Vec<DVector<f64>>, ProbeError> {
    let onset_term = &model.layout.terms[model.layout.term_index(cols::ONSET)?];
    if !onset_term.levels.iter().any(|l| l == onset.as_str()) {
        return Err(ProbeError::UnknownOnset(onset.as_str().into()));
    }
    let times = time_values(model)?;
    let mut frame = DataFrame::new(times.len());
    frame.add_numeric(cols::TIME, times.clone())?;
    frame.add_factor(cols::ONSET, &vec![onset.as_str(); times.len()])?;
    let mask = model.layout.mask(include)?;
    let builder = model.layout.row_builder_for(&frame, include)?;
    (0..times.len()).map(|i| builder.dense_row(i, Some(&mask)).map_err(ProbeError::from)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnsetSmooth {
    pub onset: OnsetClass,
    pub grid: Vec<f64>,
    pub curve: Curve,
}

/// Population-level curve of one onset class: intercept, onset offset, the
/// shared smooth and the onset's own smooth. Factor smooths and random
/// effects are left out.
pub fn onset_smooth(model: &FittedModel, onset: OnsetClass) -> Result<OnsetSmooth, ProbeError> {
    let shared = format!("s({})", cols::TIME);
    let by = format!("s({}):{}", cols::TIME, cols::ONSET);
    let rows = onset_rows(model, onset, &[INTERCEPT, cols::ONSET, &shared, &by])?;
    Ok(OnsetSmooth { onset, grid: grid(), curve: contrast_curve(model, &rows, LEVEL)? })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceCurve {
    pub pair: (OnsetClass, OnsetClass),
    pub grid: Vec<f64>,
    pub curve: Curve,
    /// Maximal runs of grid points whose band excludes zero, each widened
    /// by half a grid step on both sides (clipped to [0, 1]).
    pub significant_intervals: Vec<(f64, f64)>,
}

impl DifferenceCurve {
    pub fn label(&self) -> String {
        pair_label(self.pair)
    }

    pub fn significant(&self, j: usize) -> bool {
        self.curve.lower[j] > 0.0 || self.curve.upper[j] < 0.0
    }

    /// Total length of the significant intervals, as a fraction of [0, 1].
    pub fn significant_fraction(&self) -> f64 {
        self.significant_intervals.iter().fold(0.0, |s, (a, b)| s + (b - a))
    }

    pub fn intersects(&self, lo: f64, hi: f64) -> bool {
        self.significant_intervals.iter().any(|&(a, b)| a <= hi && b >= lo)
    }
}

pub fn pair_label((a, b): (OnsetClass, OnsetClass)) -> String {
    format!("{a}-{b}")
}

/// Groups consecutive significant grid points of the same sign.
pub fn significant_intervals(grid: &[f64], curve: &Curve) -> Vec<(f64, f64)> {
    let sign = |j: usize| {
        if curve.lower[j] > 0.0 {
            1
        } else if curve.upper[j] < 0.0 {
            -1
        } else {
            0
        }
    };
    let half = if grid.len() > 1 { 0.5 * (grid[1] - grid[0]) } else { 0.5 };
    let mut out = Vec::new();
    let mut j = 0;
    while j < grid.len() {
        let s = sign(j);
        if s == 0 {
            j += 1;
            continue;
        }
        let start = j;
        while j + 1 < grid.len() && sign(j + 1) == s {
            j += 1;
        }
        out.push(((grid[start] - half).max(0.0), (grid[j] + half).min(1.0)));
        j += 1;
    }
    out
}

/// `[parametric(A) + s_A(t)] − [parametric(B) + s_B(t)]` on the grid.
pub fn difference_smooth(model: &FittedModel, pair: (OnsetClass, OnsetClass)) -> Result<DifferenceCurve, ProbeError> {
    let by = format!("s({}):{}", cols::TIME, cols::ONSET);
    let include = [cols::ONSET, by.as_str()];
    let a = onset_rows(model, pair.0, &include)?;
    let b = onset_rows(model, pair.1, &include)?;
    let rows: Vec<DVector<f64>> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let curve = contrast_curve(model, &rows, LEVEL)?;
    let grid = grid();
    let significant_intervals = significant_intervals(&grid, &curve);
    Ok(DifferenceCurve { pair, grid, curve, significant_intervals })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceReport {
    pub source: String,
    pub stratum: Stratum,
    pub n_tokens: usize,
    pub n_rows: usize,
    pub smooths: Vec<OnsetSmooth>,
    pub differences: Vec<DifferenceCurve>,
    pub rho: f64,
    pub scale: f64,
    pub reml_score: f64,
    pub total_edf: f64,
    pub lambda: Vec<(String, f64)>,
    pub term_edf: Vec<(String, f64)>,
    pub model_spec: String,
}

impl SourceReport {
    /// `source|stratum`, unique within a report.
    pub fn key(&self) -> String {
        format!("{}|{}", self.source, self.stratum)
    }

    pub fn difference(&self, pair: (OnsetClass, OnsetClass)) -> Option<&DifferenceCurve> {
        self.differences.iter().find(|d| d.pair == pair)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbeReport {
    /// Keyed by `source|stratum`.
    pub sources: BTreeMap<String, SourceReport>,
    pub failures: BTreeMap<String, String>,
}

/// Fits one model and reports smooths and the three pairwise differences.
pub fn probe_tokens(tokens: &[VowelToken], source: &str, stratum: Stratum, kind: ResponseKind, opts: &RemlOptions) -> Result<SourceReport, ProbeError> {
    let frame = tokens_to_frame(tokens, kind)?;
    let spec = build_probe_spec(kind, stratum);
    let model = fit_model_with(&frame, &spec, opts)?;
    let smooths = OnsetClass::TARGETS.iter().map(|&o| onset_smooth(&model, o)).collect::<Result<Vec<_>, _>>()?;
    let differences = PAIRS.iter().map(|&p| difference_smooth(&model, p)).collect::<Result<Vec<_>, _>>()?;
    Ok(SourceReport {
        source: source.into(),
        stratum,
        n_tokens: tokens.len(),
        n_rows: frame.n_rows(),
        smooths,
        differences,
        rho: model.rho,
        scale: model.scale,
        reml_score: model.reml_score,
        total_edf: model.total_edf,
        lambda: model.penalty_labels.iter().cloned().zip(model.lambda.iter().copied()).collect(),
        term_edf: model.term_edf.clone(),
        model_spec: spec.to_text(),
    })
}

/// One model per (source, stratum) group, fitted in parallel. A failing
/// group is recorded in `failures` and does not affect the others.
pub fn run_probe(tokens: &[VowelToken], mode: ProbeMode, opts: &RemlOptions) -> Result<ProbeReport, ProbeError> {
    if tokens.is_empty() {
        return Err(ProbeError::Empty);
    }
    let mut groups: BTreeMap<(String, Stratum), Vec<VowelToken>> = BTreeMap::new();
    for t in tokens {
        let s = Stratum::of(t, mode.split).ok_or_else(|| ProbeError::Unlabelled(t.id.clone()))?;
        groups.entry((t.source.clone(), s)).or_default().push(t.clone());
    }
    let results: Vec<_> = groups
        .into_par_iter()
        .map(|((source, stratum), toks)| {
            let key = format!("{source}|{stratum}");
            (key, probe_tokens(&toks, &source, stratum, mode.kind, opts))
        })
        .collect();
    let mut report = ProbeReport::default();
    for (key, r) in results {
        match r {
            Ok(s) => {
                report.sources.insert(key, s);
            }
            Err(e) => {
                report.failures.insert(key, e.to_string());
            }
        }
    }
    Ok(report)
}
