//! Praat TextGrid reading and writing.
//!
//! Both the "long" (`key = value`) and "short" (bare values) text syntaxes are
//! read through one value tokenizer: labels, `=`, `:` and `[n]` markers are
//! skipped, leaving the same value stream for both layouts. Output is always
//! the long syntax.

use std::fmt::Write as _;

use super::ParseError;

/// Tier spans may disagree with the document span by at most this much.
const SPAN_TOLERANCE: f64 = 1e-3;
/// Adjacent intervals must meet within this tolerance.
const CONTIGUITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
    pub label: String,
}

impl Interval {
    pub fn new(start: f64, end: f64, label: impl Into<String>) -> Self {
        Self { start, end, label: label.into() }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalTier {
    pub name: String,
    pub xmin: f64,
    pub xmax: f64,
    pub intervals: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub time: f64,
    pub mark: String,
}

/// Praat "TextTier". Parsed and written back, otherwise unused.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTier {
    pub name: String,
    pub xmin: f64,
    pub xmax: f64,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tier {
    Interval(IntervalTier),
    Point(PointTier),
}

impl Tier {
    pub fn name(&self) -> &str {
        match self {
            Tier::Interval(t) => &t.name,
            Tier::Point(t) => &t.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationDoc {
    pub xmin: f64,
    pub xmax: f64,
    pub tiers: Vec<Tier>,
}

impl AnnotationDoc {
    pub fn empty() -> Self {
        Self { xmin: 0.0, xmax: 0.0, tiers: Vec::new() }
    }

    /// First interval tier with the given name.
    pub fn interval_tier(&self, name: &str) -> Option<&IntervalTier> {
        self.tiers.iter().find_map(|t| match t {
            Tier::Interval(it) if it.name == name => Some(it),
            _ => None,
        })
    }

    /// Checks the structural invariants. `line` is reported as 0 because the
    /// document may not come from a file.
    pub fn validate(&self) -> Result<(), ParseError> {
        if !(self.xmin.is_finite() && self.xmax.is_finite()) || self.xmin > self.xmax {
            return Err(ParseError::new(0, format!("document span [{}, {}] is invalid", self.xmin, self.xmax)));
        }
        for tier in &self.tiers {
            let (name, xmin, xmax) = match tier {
                Tier::Interval(t) => (&t.name, t.xmin, t.xmax),
                Tier::Point(t) => (&t.name, t.xmin, t.xmax),
            };
            if (xmin - self.xmin).abs() > SPAN_TOLERANCE || (xmax - self.xmax).abs() > SPAN_TOLERANCE {
                return Err(ParseError::new(0, format!("tier \"{name}\" span [{xmin}, {xmax}] does not match document")));
            }
            if let Tier::Interval(t) = tier {
                check_intervals(t, |_| 0)?;
            }
        }
        Ok(())
    }
}

fn check_intervals(tier: &IntervalTier, line_of: impl Fn(usize) -> usize) -> Result<(), ParseError> {
    let mut prev_end: Option<f64> = None;
    for (i, iv) in tier.intervals.iter().enumerate() {
        let line = line_of(i);
        if !(iv.start.is_finite() && iv.end.is_finite()) || iv.end < iv.start {
            return Err(ParseError::new(
                line,
                format!("tier \"{}\" interval {} has non-monotone times [{}, {}]", tier.name, i + 1, iv.start, iv.end),
            ));
        }
        let expected = prev_end.unwrap_or(tier.xmin);
        let tol = if prev_end.is_some() { CONTIGUITY_TOLERANCE } else { SPAN_TOLERANCE };
        if iv.start < expected - tol {
            return Err(ParseError::new(
                line,
                format!(
                    "tier \"{}\" interval {} starts at {} before the previous interval ends at {}",
                    tier.name,
                    i + 1,
                    iv.start,
                    expected
                ),
            ));
        }
        if iv.start > expected + tol {
            return Err(ParseError::new(
                line,
                format!("tier \"{}\" interval {} leaves a gap after {}", tier.name, i + 1, expected),
            ));
        }
        prev_end = Some(iv.end);
    }
    if let Some(end) = prev_end {
        if (end - tier.xmax).abs() > SPAN_TOLERANCE {
            return Err(ParseError::new(
                line_of(tier.intervals.len().saturating_sub(1)),
                format!("tier \"{}\" ends at {} but its span ends at {}", tier.name, end, tier.xmax),
            ));
        }
    }
    Ok(())
}

/// Decodes raw file bytes: UTF-8 (with or without BOM) or UTF-16 with a BOM.
pub fn decode_textgrid_bytes(bytes: &[u8]) -> Result<String, ParseError> {
    let utf16 = |le: bool| -> Result<String, ParseError> {
        let body = &bytes[2..];
        if body.len() % 2 != 0 {
            return Err(ParseError::new(0, "truncated UTF-16 data"));
        }
        let units: Vec<u16> = body
            .chunks_exact(2)
            .map(|c| if le { u16::from_le_bytes([c[0], c[1]]) } else { u16::from_be_bytes([c[0], c[1]]) })
            .collect();
        String::from_utf16(&units).map_err(|_| ParseError::new(0, "invalid UTF-16 data"))
    };
    match bytes {
        [0xFF, 0xFE, ..] => utf16(true),
        [0xFE, 0xFF, ..] => utf16(false),
        [0xEF, 0xBB, 0xBF, rest @ ..] => {
            String::from_utf8(rest.to_vec()).map_err(|e| ParseError::new(0, format!("invalid UTF-8: {e}")))
        }
        _ => String::from_utf8(bytes.to_vec()).map_err(|e| ParseError::new(0, format!("invalid UTF-8: {e}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(f64),
    Text(String),
    Flag(String),
}

struct Token {
    value: Value,
    line: usize,
}

fn tokenize(doc: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = doc.char_indices().peekable();
    let mut line = 1usize;
    while let Some(&(_, c)) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() || c == '\u{feff}' => {
                chars.next();
            }
            '"' => {
                let start_line = line;
                chars.next();
                let mut text = String::new();
                let mut closed = false;
                while let Some((_, c)) = chars.next() {
                    if c == '"' {
                        if matches!(chars.peek(), Some(&(_, '"'))) {
                            chars.next();
                            text.push('"');
                        } else {
                            closed = true;
                            break;
                        }
                    } else {
                        if c == '\n' {
                            line += 1;
                        }
                        text.push(c);
                    }
                }
                if !closed {
                    return Err(ParseError::new(start_line, "unterminated string"));
                }
                out.push(Token { value: Value::Text(text), line: start_line });
            }
            '<' => {
                let mut flag = String::new();
                chars.next();
                let mut closed = false;
                for (_, c) in chars.by_ref() {
                    if c == '>' {
                        closed = true;
                        break;
                    }
                    flag.push(c);
                }
                if !closed {
                    return Err(ParseError::new(line, "unterminated <flag>"));
                }
                out.push(Token { value: Value::Flag(flag), line });
            }
            '!' => {
                // Praat comment: runs to end of line
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '[' => {
                for (_, c) in chars.by_ref() {
                    if c == ']' {
                        break;
                    }
                }
            }
            '=' | ':' | ']' => {
                chars.next();
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || c == '"' || c == '<' || c == '[' {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                let v: f64 = word
                    .parse()
                    .map_err(|_| ParseError::new(line, format!("expected a number, found \"{word}\"")))?;
                out.push(Token { value: Value::Number(v), line });
            }
            _ => {
                // bare identifier such as `xmin` or `tiers?`
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || c == '=' || c == '"' || c == '[' || c == ':' || c == '<' {
                        break;
                    }
                    chars.next();
                }
            }
        }
    }
    Ok(out)
}

struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
    last_line: usize,
}

impl Cursor {
    fn next(&mut self, what: &str) -> Result<&Token, ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                self.last_line = t.line;
                Ok(t)
            }
            None => Err(ParseError::new(self.last_line, format!("truncated file: expected {what}"))),
        }
    }

    fn number(&mut self, what: &str) -> Result<(f64, usize), ParseError> {
        let t = self.next(what)?;
        match &t.value {
            Value::Number(v) => Ok((*v, t.line)),
            other => Err(ParseError::new(t.line, format!("expected {what}, found {other:?}"))),
        }
    }

    fn text(&mut self, what: &str) -> Result<(String, usize), ParseError> {
        let t = self.next(what)?;
        match &t.value {
            Value::Text(s) => Ok((s.clone(), t.line)),
            other => Err(ParseError::new(t.line, format!("expected {what}, found {other:?}"))),
        }
    }

    fn count(&mut self, what: &str) -> Result<usize, ParseError> {
        let (v, line) = self.number(what)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(ParseError::new(line, format!("{what} must be a non-negative integer, found {v}")));
        }
        Ok(v as usize)
    }
}

/// Parses long- or short-syntax TextGrid text.
pub fn parse_textgrid(doc: &str) -> Result<AnnotationDoc, ParseError> {
    let mut cur = Cursor { tokens: tokenize(doc)?, pos: 0, last_line: 1 };

    let (file_type, line) = cur.text("file type")?;
    if file_type != "ooTextFile" && file_type != "ooTextFile short" {
        return Err(ParseError::new(line, format!("not a Praat text file (file type \"{file_type}\")")));
    }
    let (class, line) = cur.text("object class")?;
    if class != "TextGrid" {
        return Err(ParseError::new(line, format!("object class is \"{class}\", expected \"TextGrid\"")));
    }
    let (xmin, _) = cur.number("xmin")?;
    let (xmax, line) = cur.number("xmax")?;
    if xmax < xmin {
        return Err(ParseError::new(line, format!("xmax {xmax} precedes xmin {xmin}")));
    }
    let flag_tok = cur.next("tiers flag")?;
    let has_tiers = match &flag_tok.value {
        Value::Flag(f) if f == "exists" => true,
        Value::Flag(f) if f == "absent" => false,
        other => return Err(ParseError::new(flag_tok.line, format!("expected <exists> or <absent>, found {other:?}"))),
    };
    let n_tiers = if has_tiers { cur.count("tier count")? } else { 0 };

    let mut tiers = Vec::with_capacity(n_tiers);
    for _ in 0..n_tiers {
        let (class, class_line) = cur.text("tier class")?;
        let (name, _) = cur.text("tier name")?;
        let (t_min, _) = cur.number("tier xmin")?;
        let (t_max, _) = cur.number("tier xmax")?;
        if (t_min - xmin).abs() > SPAN_TOLERANCE || (t_max - xmax).abs() > SPAN_TOLERANCE {
            return Err(ParseError::new(
                class_line,
                format!("tier \"{name}\" span [{t_min}, {t_max}] differs from document span [{xmin}, {xmax}]"),
            ));
        }
        let n = cur.count("item count")?;
        match class.as_str() {
            "IntervalTier" => {
                let mut intervals = Vec::with_capacity(n);
                let mut lines = Vec::with_capacity(n);
                for _ in 0..n {
                    let (s, line) = cur.number("interval xmin")?;
                    let (e, _) = cur.number("interval xmax")?;
                    let (label, _) = cur.text("interval text")?;
                    intervals.push(Interval::new(s, e, label));
                    lines.push(line);
                }
                snap_to_span(&mut intervals, xmin, xmax);
                let tier = IntervalTier { name, xmin, xmax, intervals };
                check_intervals(&tier, |i| lines.get(i).copied().unwrap_or(class_line))?;
                tiers.push(Tier::Interval(tier));
            }
            "TextTier" => {
                let mut points = Vec::with_capacity(n);
                for _ in 0..n {
                    let (time, _) = cur.number("point time")?;
                    let (mark, _) = cur.text("point mark")?;
                    points.push(Point { time, mark });
                }
                tiers.push(Tier::Point(PointTier { name, xmin, xmax, points }));
            }
            other => {
                return Err(ParseError::new(class_line, format!("unknown tier class \"{other}\"")));
            }
        }
    }
    Ok(AnnotationDoc { xmin, xmax, tiers })
}

/// Aligner output jitters by fractions of a millisecond at the tier ends.
fn snap_to_span(intervals: &mut [Interval], xmin: f64, xmax: f64) {
    if let Some(first) = intervals.first_mut() {
        if (first.start - xmin).abs() <= SPAN_TOLERANCE {
            first.start = xmin;
        }
    }
    if let Some(last) = intervals.last_mut() {
        if (last.end - xmax).abs() <= SPAN_TOLERANCE {
            last.end = xmax;
        }
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Writes the long TextGrid syntax. Refuses documents that break the
/// structural invariants.
pub fn serialize_textgrid(doc: &AnnotationDoc) -> Result<String, ParseError> {
    doc.validate()?;
    let mut out = String::new();
    out.push_str("File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n");
    let _ = writeln!(out, "xmin = {} ", doc.xmin);
    let _ = writeln!(out, "xmax = {} ", doc.xmax);
    if doc.tiers.is_empty() {
        out.push_str("tiers? <absent> \n");
        return Ok(out);
    }
    out.push_str("tiers? <exists> \n");
    let _ = writeln!(out, "size = {} ", doc.tiers.len());
    out.push_str("item []: \n");
    for (i, tier) in doc.tiers.iter().enumerate() {
        let _ = writeln!(out, "    item [{}]:", i + 1);
        match tier {
            Tier::Interval(t) => {
                out.push_str("        class = \"IntervalTier\" \n");
                let _ = writeln!(out, "        name = {} ", quote(&t.name));
                let _ = writeln!(out, "        xmin = {} ", t.xmin);
                let _ = writeln!(out, "        xmax = {} ", t.xmax);
                let _ = writeln!(out, "        intervals: size = {} ", t.intervals.len());
                for (j, iv) in t.intervals.iter().enumerate() {
                    let _ = writeln!(out, "        intervals [{}]:", j + 1);
                    let _ = writeln!(out, "            xmin = {} ", iv.start);
                    let _ = writeln!(out, "            xmax = {} ", iv.end);
                    let _ = writeln!(out, "            text = {} ", quote(&iv.label));
                }
            }
            Tier::Point(t) => {
                out.push_str("        class = \"TextTier\" \n");
                let _ = writeln!(out, "        name = {} ", quote(&t.name));
                let _ = writeln!(out, "        xmin = {} ", t.xmin);
                let _ = writeln!(out, "        xmax = {} ", t.xmax);
                let _ = writeln!(out, "        points: size = {} ", t.points.len());
                for (j, p) in t.points.iter().enumerate() {
                    let _ = writeln!(out, "        points [{}]:", j + 1);
                    let _ = writeln!(out, "            number = {} ", p.time);
                    let _ = writeln!(out, "            mark = {} ", quote(&p.mark));
                }
            }
        }
    }
    Ok(out)
}
