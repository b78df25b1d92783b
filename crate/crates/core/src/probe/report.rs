use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{ProbeError, SourceReport};

pub fn write_smooths(r: &SourceReport) -> String {
    let mut out = String::from("grid\tonset\testimate\tse\tlower\tupper\n");
    for s in &r.smooths {
        for j in 0..s.grid.len() {
            let c = &s.curve;
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}", s.grid[j], s.onset, c.estimate[j], c.se[j], c.lower[j], c.upper[j]);
        }
    }
    out
}

pub fn write_differences(r: &SourceReport) -> String {
    let mut out = String::from("grid\tpair\testimate\tse\tlower\tupper\tsignificant\n");
    for d in &r.differences {
        let label = d.label();
        for j in 0..d.grid.len() {
            let c = &d.curve;
            let _ = writeln!(
                out,
                "{}\t{label}\t{}\t{}\t{}\t{}\t{}",
                d.grid[j],
                c.estimate[j],
                c.se[j],
                c.lower[j],
                c.upper[j],
                d.significant(j)
            );
        }
    }
    out
}

/// Key/value metadata: sizes, AR1 rho, smoothing parameters, edf, REML
/// score and the significant intervals of each pair.
pub fn write_metadata(r: &SourceReport) -> String {
    let mut out = String::from("key\tvalue\n");
    let _ = writeln!(out, "source\t{}", r.source);
    let _ = writeln!(out, "stratum\t{}", r.stratum);
    let _ = writeln!(out, "n_tokens\t{}", r.n_tokens);
    let _ = writeln!(out, "n_rows\t{}", r.n_rows);
    let _ = writeln!(out, "rho\t{}", r.rho);
    let _ = writeln!(out, "scale\t{}", r.scale);
    let _ = writeln!(out, "reml_score\t{}", r.reml_score);
    let _ = writeln!(out, "total_edf\t{}", r.total_edf);
    for (label, l) in &r.lambda {
        let _ = writeln!(out, "lambda:{label}\t{l}");
    }
    for (label, e) in &r.term_edf {
        let _ = writeln!(out, "edf:{label}\t{e}");
    }
    for d in &r.differences {
        let ivs: Vec<String> = d.significant_intervals.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        let _ = writeln!(out, "significant:{}\t{}", d.label(), if ivs.is_empty() { "none".into() } else { ivs.join(",") });
    }
    out
}

pub fn parse_metadata(text: &str) -> Result<BTreeMap<String, String>, ProbeError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('\t').ok_or_else(|| ProbeError::Report(format!("metadata line {}: no tab", i + 1)))?;
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}
