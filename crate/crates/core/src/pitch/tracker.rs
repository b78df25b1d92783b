//! Short-time autocorrelation F0 estimation.
//!
//! Each frame is mean-removed, Hann-windowed and autocorrelated. The
//! autocorrelation is normalized by its zero lag and divided by the window's
//! own autocorrelation, so a perfectly periodic signal scores close to 1 at
//! every multiple of its period. Peaks inside the lag band are refined by
//! parabolic interpolation and ranked with a small per-octave cost that
//! prefers the shortest plausible period.

use super::{Audio, PitchError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchConfig {
    /// Lowest admissible F0 in Hz.
    pub floor: f64,
    /// Highest admissible F0 in Hz.
    pub ceiling: f64,
    /// Hop between frame centers in seconds.
    pub time_step: f64,
    /// Minimum normalized autocorrelation peak for a voiced frame.
    pub voicing_threshold: f64,
    /// Window length in periods of `floor`.
    pub window_factor: f64,
    /// Frames whose peak amplitude is below this fraction of the global peak
    /// are unvoiced.
    pub silence_threshold: f64,
    /// Score penalty per octave of lag above the shortest admissible one.
    pub octave_cost: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            floor: 75.0,
            ceiling: 600.0,
            time_step: 0.010,
            voicing_threshold: 0.45,
            window_factor: 3.0,
            silence_threshold: 0.03,
            octave_cost: 0.01,
        }
    }
}

impl PitchConfig {
    pub fn validate(&self) -> Result<(), PitchError> {
        let ok = self.floor > 0.0
            && self.floor < self.ceiling
            && self.time_step > 0.0
            && self.voicing_threshold > 0.0
            && self.voicing_threshold < 1.0
            && self.window_factor > 0.0
            && self.silence_threshold >= 0.0
            && self.octave_cost >= 0.0
            && [self.floor, self.ceiling, self.time_step, self.window_factor].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(PitchError::Config(format!("{self:?}")))
        }
    }

    /// Analysis window length in seconds.
    pub fn window_duration(&self) -> f64 {
        self.window_factor / self.floor
    }

    pub fn with_range(self, floor: f64, ceiling: f64) -> Self {
        Self { floor, ceiling, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchFrame {
    /// Center of the analysis window in seconds.
    pub time: f64,
    /// Present iff the frame is voiced.
    pub f0: Option<f64>,
    /// Normalized autocorrelation of the selected peak (0 when silent).
    pub strength: f64,
}

impl PitchFrame {
    pub fn voiced(&self) -> bool {
        self.f0.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitchContour {
    pub frames: Vec<PitchFrame>,
    /// Range the estimates were constrained to.
    pub floor: f64,
    pub ceiling: f64,
    pub time_step: f64,
}

impl PitchContour {
    pub fn voiced_f0(&self) -> impl Iterator<Item = f64> + '_ {
        self.frames.iter().filter_map(|f| f.f0)
    }

    pub fn start_time(&self) -> Option<f64> {
        self.frames.first().map(|f| f.time)
    }

    pub fn end_time(&self) -> Option<f64> {
        self.frames.last().map(|f| f.time)
    }
}

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

fn autocorrelation(x: &[f64], max_lag: usize, out: &mut [f64]) {
    for (lag, slot) in out.iter_mut().enumerate().take(max_lag + 1) {
        *slot = x[..x.len() - lag].iter().zip(&x[lag..]).map(|(a, b)| a * b).sum();
    }
}

/// Estimates an F0 contour from mono samples.
pub fn extract_f0(samples: &[f64], sample_rate: f64, cfg: &PitchConfig) -> Result<PitchContour, PitchError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(PitchError::Input("empty signal".into()));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(PitchError::Input("signal contains non-finite samples".into()));
    }
    if !(sample_rate >= 8000.0) {
        return Err(PitchError::Input(format!("sample rate {sample_rate} Hz is below 8000 Hz")));
    }
    let window = cfg.window_duration();
    let win_len = (window * sample_rate).round() as usize;
    let duration = samples.len() as f64 / sample_rate;
    if win_len < 3 || win_len > samples.len() {
        return Err(PitchError::Input(format!(
            "signal of {duration:.4} s is shorter than one {window:.4} s analysis window"
        )));
    }
    let n_frames = ((duration - window) / cfg.time_step + 1e-9).floor() as usize + 1;

    let min_lag = ((sample_rate / cfg.ceiling).floor() as usize).max(1);
    let max_lag = ((sample_rate / cfg.floor).ceil() as usize).min(win_len - 2);
    let taper = hann(win_len);
    let mut window_ac = vec![0.0; max_lag + 2];
    autocorrelation(&taper, max_lag + 1, &mut window_ac);
    let w0 = window_ac[0];
    let global_peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));

    let mut frame = vec![0.0; win_len];
    let mut ac = vec![0.0; max_lag + 2];
    let mut norm = vec![0.0; max_lag + 2];
    let mut frames = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let start = ((i as f64 * cfg.time_step) * sample_rate).round() as usize;
        let start = start.min(samples.len() - win_len);
        let time = i as f64 * cfg.time_step + window / 2.0;
        let chunk = &samples[start..start + win_len];
        let local_peak = chunk.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if global_peak == 0.0 || local_peak < cfg.silence_threshold * global_peak {
            frames.push(PitchFrame { time, f0: None, strength: 0.0 });
            continue;
        }
        let mean = chunk.iter().sum::<f64>() / win_len as f64;
        for ((f, s), w) in frame.iter_mut().zip(chunk).zip(&taper) {
            *f = (s - mean) * w;
        }
        autocorrelation(&frame, max_lag + 1, &mut ac);
        if ac[0] <= 0.0 {
            frames.push(PitchFrame { time, f0: None, strength: 0.0 });
            continue;
        }
        for lag in 0..=max_lag + 1 {
            norm[lag] = (ac[lag] / ac[0]) / (window_ac[lag] / w0);
        }

        let mut best: Option<(f64, f64, f64)> = None; // (score, strength, f0)
        for lag in min_lag.max(1)..=max_lag {
            let (prev, cur, next) = (norm[lag - 1], norm[lag], norm[lag + 1]);
            if !(cur > prev && cur >= next) {
                continue;
            }
            let denom = prev - 2.0 * cur + next;
            let shift = if denom < 0.0 { (0.5 * (prev - next) / denom).clamp(-0.5, 0.5) } else { 0.0 };
            let strength = cur - 0.25 * (prev - next) * shift;
            let period = (lag as f64 + shift) / sample_rate;
            let f0 = 1.0 / period;
            if f0 < cfg.floor || f0 > cfg.ceiling {
                continue;
            }
            let score = strength - cfg.octave_cost * (cfg.floor * period).log2();
            if best.is_none_or(|(s, _, _)| score > s) {
                best = Some((score, strength, f0));
            }
        }
        let frame_out = match best {
            Some((_, strength, f0)) if strength >= cfg.voicing_threshold => PitchFrame { time, f0: Some(f0), strength },
            Some((_, strength, _)) => PitchFrame { time, f0: None, strength },
            None => PitchFrame { time, f0: None, strength: 0.0 },
        };
        frames.push(frame_out);
    }
    Ok(PitchContour { frames, floor: cfg.floor, ceiling: cfg.ceiling, time_step: cfg.time_step })
}

pub fn extract_audio(audio: &Audio, cfg: &PitchConfig) -> Result<PitchContour, PitchError> {
    extract_f0(&audio.samples, audio.sample_rate, cfg)
}
