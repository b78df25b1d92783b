//! Figures rendered from a fitted synthetic report.

use segprobe::render::render_figures;
use segprobe::synth::{synth_tokens, SynthSpec};
use segprobe_core::gam::RemlOptions;
use segprobe_core::probe::{run_probe, ProbeMode, ProbeReport, ResponseKind};
use segprobe_core::strata::Split;

fn report(offset: f64) -> ProbeReport {
    let mut spec = SynthSpec::new(150, 5);
    spec.effects.voiceless.offset = offset;
    let tokens = synth_tokens(&spec).unwrap().tokens;
    run_probe(&tokens, ProbeMode { kind: ResponseKind::SingleSpeakerHz, split: Split::MedianFrequency }, &RemlOptions::default()).unwrap()
}

/// Panel groups of a row figure, in drawing order.
fn panels(svg: &str) -> Vec<&str> {
    svg.split("<g>").skip(1).collect()
}

#[test]
fn early_effect_is_shaded_in_the_voiceless_panel() {
    let r = report(2.0);
    let figs = render_figures(&r).unwrap();
    let row = &figs["synth|high"].row;
    let p = panels(row);
    assert_eq!(p.len(), 4);
    // panel order: smooths, voiceless-sonorant, voiced-sonorant, voiceless-voiced
    assert!(p[1].contains(r#"class="significant""#));
    let d = r.sources["synth|high"].differences.iter().find(|d| d.label() == "voiceless-sonorant").unwrap();
    assert!(d.intersects(0.0, 0.3));
    let title = format!("significant: {}-{}", d.significant_intervals[0].0, d.significant_intervals[0].1);
    assert!(p[1].contains(&title));
    assert_eq!(render_figures(&r).unwrap(), figs);
}

#[test]
fn empty_report_cannot_be_rendered() {
    assert!(render_figures(&ProbeReport::default()).is_err());
}
