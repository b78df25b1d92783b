//! Delimited contour text: `time_s`, `f0_hz`, `voiced` per row, tab or comma
//! separated, optional header. Unvoiced rows may leave `f0_hz` empty or
//! write `NA` or 0.

use std::fmt::Write as _;

use super::{PitchConfig, PitchContour, PitchError, PitchFrame};

pub fn read_contour(text: &str, defaults: &PitchConfig) -> Result<PitchContour, PitchError> {
    let mut frames: Vec<PitchFrame> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if row.contains('\t') { row.split('\t') } else { row.split(',') }.map(str::trim).collect();
        let err = |message: String| PitchError::Contour { line, message };
        if frames.is_empty() && fields.first().is_some_and(|f| f.parse::<f64>().is_err()) {
            continue; // header
        }
        if fields.len() < 2 {
            return Err(err(format!("expected time_s, f0_hz, voiced; found {} fields", fields.len())));
        }
        let time: f64 = fields[0].parse().map_err(|_| err(format!("bad time \"{}\"", fields[0])))?;
        let f0 = match fields[1] {
            "" | "NA" | "nan" | "NaN" | "--undefined--" => None,
            v => {
                let hz: f64 = v.parse().map_err(|_| err(format!("bad f0 \"{v}\"")))?;
                (hz > 0.0 && hz.is_finite()).then_some(hz)
            }
        };
        let voiced = match fields.get(2).copied() {
            None | Some("") => f0.is_some(),
            Some("1") | Some("true") | Some("TRUE") | Some("yes") => true,
            Some("0") | Some("false") | Some("FALSE") | Some("no") => false,
            Some(v) => return Err(err(format!("bad voiced flag \"{v}\""))),
        };
        if voiced && f0.is_none() {
            return Err(err("voiced frame without f0".into()));
        }
        if let Some(prev) = frames.last() {
            if time <= prev.time {
                return Err(err(format!("time {time} is not after {}", prev.time)));
            }
        }
        frames.push(PitchFrame { time, f0: if voiced { f0 } else { None }, strength: if voiced { 1.0 } else { 0.0 } });
    }
    let (mut floor, mut ceiling) = (defaults.floor, defaults.ceiling);
    for hz in frames.iter().filter_map(|f| f.f0) {
        floor = floor.min(hz);
        ceiling = ceiling.max(hz);
    }
    let time_step = match frames.as_slice() {
        [a, b, ..] => b.time - a.time,
        _ => defaults.time_step,
    };
    Ok(PitchContour { frames, floor, ceiling, time_step })
}

pub fn write_contour(contour: &PitchContour) -> String {
    let mut out = String::from("time_s\tf0_hz\tvoiced\n");
    for f in &contour.frames {
        match f.f0 {
            Some(hz) => {
                let _ = writeln!(out, "{}\t{}\t1", f.time, hz);
            }
            None => {
                let _ = writeln!(out, "{}\tNA\t0", f.time);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_with_and_without_header() {
        let a = read_contour("time_s\tf0_hz\tvoiced\n0.01\t200\t1\n0.02\tNA\t0\n", &PitchConfig::default()).unwrap();
        let b = read_contour("0.01,200,1\n0.02,,0\n", &PitchConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.frames[0].f0, Some(200.0));
        assert!(!a.frames[1].voiced());
        assert!((a.time_step - 0.01).abs() < 1e-12);
    }

    #[test]
    fn round_trip() {
        let c = read_contour("0.005\t123.5\t1\n0.015\t0\t0\n0.025\t124\t1\n", &PitchConfig::default()).unwrap();
        assert_eq!(read_contour(&write_contour(&c), &PitchConfig::default()).unwrap(), c);
    }

    #[test]
    fn rejects_non_monotone_time() {
        let err = read_contour("0.02\t200\t1\n0.01\t200\t1\n", &PitchConfig::default()).unwrap_err();
        assert!(matches!(err, PitchError::Contour { line: 2, .. }));
    }
}
