//! SVG 1.1 figures of probe reports. Output is a pure function of the
//! report, so identical reports give identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Result};

use segprobe_core::gam::Curve;
use segprobe_core::inventory::OnsetClass;
use segprobe_core::probe::{DifferenceCurve, OnsetSmooth, ProbeReport, SourceReport};

const PANEL_W: f64 = 300.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 52.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 40.0;
const PLOT_W: f64 = PANEL_W - MARGIN_L - MARGIN_R;
const PLOT_H: f64 = PANEL_H - MARGIN_T - MARGIN_B;

fn onset_color(o: OnsetClass) -> &'static str {
    match o {
        OnsetClass::VoicelessObstruent => "#d62728",
        OnsetClass::VoicedObstruent => "#1f77b4",
        OnsetClass::Sonorant => "#2ca02c",
        OnsetClass::Other => "#7f7f7f",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Step of roughly `span / 4` from the 1-2-5 sequence.
fn nice_step(span: f64) -> f64 {
    let raw = span / 4.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

/// Axis range covering every band and zero-free data with a small pad.
fn y_range<'a>(curves: impl Iterator<Item = &'a Curve>, include_zero: bool) -> (f64, f64) {
    let (mut lo, mut hi) = if include_zero { (0.0f64, 0.0f64) } else { (f64::INFINITY, f64::NEG_INFINITY) };
    for c in curves {
        for v in c.lower.iter().chain(&c.upper).chain(&c.estimate) {
            if v.is_finite() {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-9 {
        let pad = lo.abs().max(1.0) * 0.1;
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

struct Panel {
    x0: f64,
    y0: f64,
    lo: f64,
    hi: f64,
}

impl Panel {
    fn px(&self, t: f64) -> f64 {
        self.x0 + MARGIN_L + t.clamp(0.0, 1.0) * PLOT_W
    }

    fn py(&self, v: f64) -> f64 {
        self.y0 + MARGIN_T + (self.hi - v) / (self.hi - self.lo) * PLOT_H
    }

    fn frame(&self, out: &mut String, title: &str, y_label: &str) {
        let (l, t) = (self.x0 + MARGIN_L, self.y0 + MARGIN_T);
        let _ = writeln!(out, r##"<rect x="{l:.2}" y="{t:.2}" width="{PLOT_W:.2}" height="{PLOT_H:.2}" fill="none" stroke="#000000" stroke-width="1"/>"##);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            l + PLOT_W / 2.0,
            self.y0 + 22.0,
            escape(title)
        );
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let x = self.px(t);
            let yb = t_axis_y(self);
            let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{yb:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000000"/>"##, yb + 4.0);
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{t}</text>"#, yb + 15.0);
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">proportion of vowel</text>"#,
            l + PLOT_W / 2.0,
            t_axis_y(self) + 30.0
        );
        let step = nice_step(self.hi - self.lo);
        let mut k = (self.lo / step).ceil() as i64;
        while (k as f64) * step <= self.hi {
            let v = k as f64 * step;
            let y = self.py(v);
            let label = format_tick(v, step);
            let _ = writeln!(out, r##"<line x1="{:.2}" y1="{y:.2}" x2="{l:.2}" y2="{y:.2}" stroke="#000000"/>"##, l - 4.0);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{label}</text>"#, l - 6.0, y + 3.5);
            k += 1;
        }
        let (cx, cy) = (self.x0 + 12.0, t + PLOT_H / 2.0);
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{cy:.2}" font-size="10" text-anchor="middle" transform="rotate(-90 {cx:.2} {cy:.2})">{}</text>"#,
            escape(y_label)
        );
    }

    fn band(&self, out: &mut String, grid: &[f64], c: &Curve, color: &str) {
        let mut pts: Vec<String> = grid.iter().zip(&c.upper).map(|(t, v)| format!("{:.2},{:.2}", self.px(*t), self.py(*v))).collect();
        pts.extend(grid.iter().zip(&c.lower).rev().map(|(t, v)| format!("{:.2},{:.2}", self.px(*t), self.py(*v))));
        let _ = writeln!(out, r#"<polygon points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#, pts.join(" "));
        let line: Vec<String> = grid.iter().zip(&c.estimate).map(|(t, v)| format!("{:.2},{:.2}", self.px(*t), self.py(*v))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, line.join(" "));
    }
}

fn t_axis_y(p: &Panel) -> f64 {
    p.y0 + MARGIN_T + PLOT_H
}

fn format_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10()).ceil() as usize };
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0".into()
    } else {
        s
    }
}

fn header(width: f64, height: f64, title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="#ffffff"/>"##);
    out
}

fn response_label(r: &SourceReport) -> &'static str {
    if r.model_spec.contains("response = zf0") {
        "F0 (z)"
    } else {
        "F0 (Hz)"
    }
}

fn smooth_panel(out: &mut String, x0: f64, smooths: &[OnsetSmooth], y_label: &str) {
    let (lo, hi) = y_range(smooths.iter().map(|s| &s.curve), false);
    let p = Panel { x0, y0: 0.0, lo, hi };
    let _ = writeln!(out, "<g>");
    p.frame(out, "onset smooths", y_label);
    for s in smooths {
        p.band(out, &s.grid, &s.curve, onset_color(s.onset));
    }
    for (i, s) in smooths.iter().enumerate() {
        let (lx, ly) = (p.px(0.0) + 6.0, MARGIN_T + 12.0 + 12.0 * i as f64);
        let color = onset_color(s.onset);
        let _ = writeln!(out, r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#, ly - 3.5, lx + 14.0, ly - 3.5);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{ly:.2}" font-size="10">{}</text>"#, lx + 18.0, s.onset);
    }
    let _ = writeln!(out, "</g>");
}

fn difference_panel(out: &mut String, x0: f64, d: &DifferenceCurve, y_label: &str) {
    let (lo, hi) = y_range(std::iter::once(&d.curve), true);
    let p = Panel { x0, y0: 0.0, lo, hi };
    let ivs: Vec<String> = d.significant_intervals.iter().map(|(a, b)| format!("{a}-{b}")).collect();
    let _ = writeln!(out, "<g>");
    let _ = writeln!(out, "<title>significant: {}</title>", if ivs.is_empty() { "none".into() } else { ivs.join(",") });
    for (a, b) in &d.significant_intervals {
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{PLOT_H:.2}" fill="#bbbbbb" fill-opacity="0.5" stroke="none" class="significant"/>"##,
            p.px(*a),
            MARGIN_T,
            p.px(*b) - p.px(*a)
        );
    }
    let y0 = p.py(0.0);
    let _ = writeln!(
        out,
        r##"<line x1="{:.2}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="#555555" stroke-dasharray="4 3"/>"##,
        p.px(0.0),
        p.px(1.0)
    );
    p.band(out, &d.grid, &d.curve, "#000000");
    p.frame(out, &d.label(), y_label);
    let _ = writeln!(out, "</g>");
}

fn check(r: &SourceReport) -> Result<()> {
    if r.smooths.is_empty() || r.differences.is_empty() {
        bail!("report {} has no curves to render", r.key());
    }
    Ok(())
}

fn figure_title(r: &SourceReport) -> String {
    format!("{} ({}), {} tokens", r.source, r.stratum, r.n_tokens)
}

/// The four-panel row: onset smooths, then each pairwise difference.
pub fn render_row(r: &SourceReport) -> Result<String> {
    check(r)?;
    let n = 1 + r.differences.len();
    let mut out = header(PANEL_W * n as f64, PANEL_H, &figure_title(r));
    let y_label = response_label(r);
    smooth_panel(&mut out, 0.0, &r.smooths, y_label);
    for (i, d) in r.differences.iter().enumerate() {
        difference_panel(&mut out, PANEL_W * (i + 1) as f64, d, y_label);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render_smooths(r: &SourceReport) -> Result<String> {
    check(r)?;
    let mut out = header(PANEL_W, PANEL_H, &figure_title(r));
    smooth_panel(&mut out, 0.0, &r.smooths, response_label(r));
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render_differences(r: &SourceReport) -> Result<String> {
    check(r)?;
    let mut out = header(PANEL_W * r.differences.len() as f64, PANEL_H, &figure_title(r));
    for (i, d) in r.differences.iter().enumerate() {
        difference_panel(&mut out, PANEL_W * i as f64, d, response_label(r));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figures {
    pub row: String,
    pub smooths: String,
    pub differences: String,
}

/// Figures for every source of a report, keyed like the report.
pub fn render_figures(report: &ProbeReport) -> Result<BTreeMap<String, Figures>> {
    if report.sources.is_empty() {
        bail!("report contains no fitted sources");
    }
    report
        .sources
        .iter()
        .map(|(k, r)| Ok((k.clone(), Figures { row: render_row(r)?, smooths: render_smooths(r)?, differences: render_differences(r)? })))
        .collect()
}
