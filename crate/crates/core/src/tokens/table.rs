//! Tab-separated token table, one row per (token, normalized point).

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{time_prop, TokenError, VowelToken, N_POINTS};
use crate::strata::FreqBand;

pub const TOKEN_TABLE_COLUMNS: [&str; 15] = [
    "token_id",
    "source",
    "speaker",
    "word",
    "consonant",
    "onset_class",
    "vowel",
    "height",
    "duration",
    "point_index",
    "time_prop",
    "f0_hz",
    "zf0",
    "seen",
    "freq_band",
];

const NA: &str = "NA";

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Writes the table. With `cells`, a trailing `cell` column carries one
/// label per token.
pub fn write_token_table(tokens: &[VowelToken], cells: Option<&[String]>) -> String {
    let mut out = TOKEN_TABLE_COLUMNS.join("\t");
    if cells.is_some() {
        out.push_str("\tcell");
    }
    out.push('\n');
    for (i, t) in tokens.iter().enumerate() {
        let seen = t.seen.map_or(NA, |s| if s { "true" } else { "false" });
        let band = t.freq_band.map_or(NA, FreqBand::as_str);
        let prefix = format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            clean(&t.id),
            clean(&t.source),
            clean(&t.speaker),
            clean(&t.word),
            clean(&t.consonant),
            t.onset_class,
            clean(&t.vowel),
            t.vowel_height,
            t.duration
        );
        for j in 0..N_POINTS {
            let z = t.zf0.as_ref().map_or_else(|| NA.to_string(), |z| z[j].to_string());
            let _ = write!(out, "{prefix}\t{j}\t{}\t{}\t{z}\t{seen}\t{band}", time_prop(j), t.f0_norm[j]);
            if let Some(cells) = cells {
                let _ = write!(out, "\t{}", clean(&cells[i]));
            }
            out.push('\n');
        }
    }
    out
}

/// Reads a token table written by [`write_token_table`] (with or without
/// the `cell` column). Rows of one token must be consecutive and ordered by
/// `point_index`.
pub fn read_token_table(text: &str) -> Result<Vec<VowelToken>, TokenError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(TokenError::Table { line: 1, message: "empty table".into() })?;
    let cols: HashMap<&str, usize> = header.split('\t').enumerate().map(|(i, c)| (c.trim(), i)).collect();
    let col = |name: &str| {
        cols.get(name).copied().ok_or_else(|| TokenError::Table { line: 1, message: format!("missing column \"{name}\"") })
    };
    let idx: Vec<usize> = TOKEN_TABLE_COLUMNS.iter().map(|c| col(c)).collect::<Result<_, _>>()?;
    let [id_c, src_c, spk_c, word_c, cons_c, onset_c, vowel_c, height_c, dur_c, pt_c, _tp_c, hz_c, z_c, seen_c, band_c] =
        idx[..]
    else {
        unreachable!()
    };

    let mut tokens: Vec<VowelToken> = Vec::new();
    let mut z_rows: Vec<Option<f64>> = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split('\t').collect();
        let err = |message: String| TokenError::Table { line, message };
        let get = |c: usize| f.get(c).copied().ok_or_else(|| err(format!("row has only {} fields", f.len())));
        let num = |c: usize| -> Result<f64, TokenError> {
            let v = get(c)?;
            v.parse().map_err(|_| err(format!("\"{v}\" is not a number")))
        };
        let point: usize = get(pt_c)?.parse().map_err(|_| err("bad point_index".into()))?;
        let id = get(id_c)?;
        if point == 0 {
            finish(&mut tokens, &mut z_rows, line)?;
            let onset_class = get(onset_c)?.parse().map_err(|e| err(format!("{e}")))?;
            let vowel_height = get(height_c)?.parse().map_err(|e| err(format!("{e}")))?;
            let seen = match get(seen_c)? {
                "true" => Some(true),
                "false" => Some(false),
                NA | "" => None,
                v => return Err(err(format!("bad seen flag \"{v}\""))),
            };
            let freq_band = match get(band_c)? {
                NA | "" => None,
                v => Some(v.parse().map_err(|e| err(format!("{e}")))?),
            };
            tokens.push(VowelToken {
                id: id.to_string(),
                source: get(src_c)?.to_string(),
                speaker: get(spk_c)?.to_string(),
                word: get(word_c)?.to_string(),
                consonant: get(cons_c)?.to_string(),
                onset_class,
                vowel: get(vowel_c)?.to_string(),
                vowel_height,
                duration: num(dur_c)?,
                f0_norm: Vec::with_capacity(N_POINTS),
                zf0: None,
                seen,
                freq_band,
            });
        }
        let tok = tokens.last_mut().ok_or_else(|| err("first row of a token must have point_index 0".into()))?;
        if tok.id != id || tok.f0_norm.len() != point {
            return Err(err(format!("row out of order for token \"{id}\" (point {point})")));
        }
        tok.f0_norm.push(num(hz_c)?);
        z_rows.push(match get(z_c)? {
            NA | "" => None,
            _ => Some(num(z_c)?),
        });
    }
    finish(&mut tokens, &mut z_rows, text.lines().count())?;
    Ok(tokens)
}

fn finish(tokens: &mut [VowelToken], z_rows: &mut Vec<Option<f64>>, line: usize) -> Result<(), TokenError> {
    let Some(tok) = tokens.last_mut() else {
        return Ok(());
    };
    if tok.f0_norm.len() != N_POINTS {
        return Err(TokenError::Table {
            line,
            message: format!("token \"{}\" has {} points, expected {N_POINTS}", tok.id, tok.f0_norm.len()),
        });
    }
    let z: Option<Vec<f64>> = z_rows.drain(..).collect();
    tok.zf0 = z;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inventory::{OnsetClass, VowelHeight};

    fn token(id: &str, z: bool) -> VowelToken {
        let f0: Vec<f64> = (0..N_POINTS).map(|j| 200.0 + j as f64 * 0.5).collect();
        VowelToken {
            id: id.into(),
            source: "lj".into(),
            speaker: "lj".into(),
            word: "pat".into(),
            consonant: "pʰ".into(),
            onset_class: OnsetClass::VoicelessObstruent,
            vowel: "æ".into(),
            vowel_height: VowelHeight::Low,
            duration: 0.123,
            zf0: z.then(|| f0.iter().map(|v| (v - 205.0) / 3.0).collect()),
            f0_norm: f0,
            seen: Some(true),
            freq_band: Some(FreqBand::High),
        }
    }

    #[test]
    fn round_trip() {
        let toks = vec![token("a", true), token("b", false)];
        let text = write_token_table(&toks, None);
        assert_eq!(text.lines().count(), 1 + 2 * N_POINTS);
        assert_eq!(read_token_table(&text).unwrap(), toks);
        let cells = vec!["lj|high|voiceless".to_string(); 2];
        let with_cells = write_token_table(&toks, Some(&cells));
        assert!(with_cells.lines().next().unwrap().ends_with("\tcell"));
        assert_eq!(read_token_table(&with_cells).unwrap(), toks);
    }

    #[test]
    fn time_prop_column_is_exact() {
        let text = write_token_table(&[token("a", false)], None);
        let props: Vec<&str> = text.lines().skip(1).map(|l| l.split('\t').nth(10).unwrap()).collect();
        assert_eq!(props[0], "0");
        assert_eq!(props[1], "0.05");
        assert_eq!(props[10], "0.5");
        assert_eq!(props[20], "1");
    }

    #[test]
    fn truncated_token_is_an_error() {
        let text = write_token_table(&[token("a", false)], None);
        let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(read_token_table(&cut).is_err());
    }
}
