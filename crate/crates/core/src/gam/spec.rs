//! Model specifications and their key = value text form.

use std::fmt;

use super::GamError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    ParametricFactor,
    Smooth,
    ByFactorSmooth,
    FactorSmooth,
    RandomEffect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermSpec {
    pub kind: TermKind,
    /// Smooth covariate, or the factor of parametric and random terms.
    pub covariate: String,
    /// The `by` factor of a by-factor smooth or the grouping factor of a
    /// factor smooth.
    pub by_or_group: Option<String>,
    /// Optional `by` factor of a factor smooth: one curve per
    /// (group, by) combination, all sharing the smoothing parameters.
    pub by: Option<String>,
    pub k: usize,
    pub penalty_order: usize,
}

impl TermSpec {
    fn base(kind: TermKind, covariate: &str) -> Self {
        Self { kind, covariate: covariate.into(), by_or_group: None, by: None, k: 0, penalty_order: 0 }
    }

    pub fn parametric(factor: &str) -> Self {
        Self::base(TermKind::ParametricFactor, factor)
    }

    pub fn random(factor: &str) -> Self {
        Self::base(TermKind::RandomEffect, factor)
    }

    pub fn smooth(covariate: &str, k: usize, m: usize) -> Self {
        Self { k, penalty_order: m, ..Self::base(TermKind::Smooth, covariate) }
    }

    pub fn by_smooth(covariate: &str, by: &str, k: usize, m: usize) -> Self {
        Self { by_or_group: Some(by.into()), ..Self::smooth(covariate, k, m) }.with_kind(TermKind::ByFactorSmooth)
    }

    pub fn factor_smooth(covariate: &str, group: &str, k: usize, m: usize) -> Self {
        Self { by_or_group: Some(group.into()), ..Self::smooth(covariate, k, m) }.with_kind(TermKind::FactorSmooth)
    }

    pub fn factor_smooth_by(covariate: &str, group: &str, by: &str, k: usize, m: usize) -> Self {
        Self { by: Some(by.into()), ..Self::factor_smooth(covariate, group, k, m) }
    }

    fn with_kind(mut self, kind: TermKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn is_spline(&self) -> bool {
        matches!(self.kind, TermKind::Smooth | TermKind::ByFactorSmooth | TermKind::FactorSmooth)
    }

    /// Short label used in reports and for term selection in prediction.
    pub fn label(&self) -> String {
        let g = self.by_or_group.as_deref().unwrap_or("?");
        match self.kind {
            TermKind::ParametricFactor => self.covariate.clone(),
            TermKind::RandomEffect => format!("re({})", self.covariate),
            TermKind::Smooth => format!("s({})", self.covariate),
            TermKind::ByFactorSmooth => format!("s({}):{g}", self.covariate),
            TermKind::FactorSmooth => match &self.by {
                Some(by) => format!("fs({},{g}):{by}", self.covariate),
                None => format!("fs({},{g})", self.covariate),
            },
        }
    }

    pub fn validate(&self) -> Result<(), GamError> {
        if self.is_spline() {
            if self.k < 3 {
                return Err(GamError::Config(format!("{}: k = {} is below 3", self.label(), self.k)));
            }
            if !(1..=2).contains(&self.penalty_order) {
                return Err(GamError::Config(format!("{}: penalty order {} is not 1 or 2", self.label(), self.penalty_order)));
            }
        }
        let needs_group = matches!(self.kind, TermKind::ByFactorSmooth | TermKind::FactorSmooth);
        if needs_group != self.by_or_group.is_some() {
            return Err(GamError::Config(format!("{}: grouping factor misplaced", self.label())));
        }
        if self.by.is_some() && self.kind != TermKind::FactorSmooth {
            return Err(GamError::Config(format!("{}: only factor smooths take a by factor", self.label())));
        }
        Ok(())
    }

    fn to_text(&self) -> String {
        let g = self.by_or_group.as_deref().unwrap_or("");
        match self.kind {
            TermKind::ParametricFactor => format!("parametric({})", self.covariate),
            TermKind::RandomEffect => format!("re({})", self.covariate),
            TermKind::Smooth => format!("s({}, k={}, m={})", self.covariate, self.k, self.penalty_order),
            TermKind::ByFactorSmooth => format!("s({}, by={g}, k={}, m={})", self.covariate, self.k, self.penalty_order),
            TermKind::FactorSmooth => match &self.by {
                Some(by) => format!("fs({}, {g}, by={by}, k={}, m={})", self.covariate, self.k, self.penalty_order),
                None => format!("fs({}, {g}, k={}, m={})", self.covariate, self.k, self.penalty_order),
            },
        }
    }

    fn from_text(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let open = text.find('(').ok_or("missing \"(\"")?;
        if !text.ends_with(')') {
            return Err("missing \")\"".into());
        }
        let name = &text[..open];
        let mut positional = Vec::new();
        let (mut by, mut k, mut m) = (None, None, None);
        for arg in text[open + 1..text.len() - 1].split(',').map(str::trim).filter(|a| !a.is_empty()) {
            match arg.split_once('=') {
                Some((key, v)) => {
                    let v = v.trim();
                    match key.trim() {
                        "by" => by = Some(v.to_string()),
                        "k" => k = Some(v.parse::<usize>().map_err(|_| format!("bad k \"{v}\""))?),
                        "m" => m = Some(v.parse::<usize>().map_err(|_| format!("bad m \"{v}\""))?),
                        other => return Err(format!("unknown argument \"{other}\"")),
                    }
                }
                None => positional.push(arg.to_string()),
            }
        }
        let need = |n: usize| if positional.len() == n { Ok(()) } else { Err(format!("{name} takes {n} positional argument(s)")) };
        let km = || Ok::<_, String>((k.ok_or("missing k")?, m.ok_or("missing m")?));
        let spec = match name {
            "parametric" => {
                need(1)?;
                TermSpec::parametric(&positional[0])
            }
            "re" => {
                need(1)?;
                TermSpec::random(&positional[0])
            }
            "s" => {
                need(1)?;
                let (k, m) = km()?;
                match by {
                    Some(by) => TermSpec::by_smooth(&positional[0], &by, k, m),
                    None => TermSpec::smooth(&positional[0], k, m),
                }
            }
            "fs" => {
                need(2)?;
                let (k, m) = km()?;
                match by {
                    Some(by) => TermSpec::factor_smooth_by(&positional[0], &positional[1], &by, k, m),
                    None => TermSpec::factor_smooth(&positional[0], &positional[1], k, m),
                }
            }
            other => return Err(format!("unknown term type \"{other}\"")),
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ar1 {
    /// Estimate rho from a preliminary uncorrelated fit, then refit.
    Estimate,
    Fixed(f64),
    Off,
}

impl fmt::Display for Ar1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ar1::Estimate => f.write_str("estimate"),
            Ar1::Fixed(r) => write!(f, "{r}"),
            Ar1::Off => f.write_str("off"),
        }
    }
}

/// A Gaussian additive model with an implicit intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub response: String,
    pub terms: Vec<TermSpec>,
    pub ar1: Ar1,
    /// Flag column marking the first row of each trajectory.
    pub series_start: Option<String>,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), GamError> {
        for t in &self.terms {
            t.validate()?;
        }
        if self.ar1 != Ar1::Off && self.series_start.is_none() {
            return Err(GamError::Config("AR1 requires a series_start column".into()));
        }
        if let Ar1::Fixed(r) = self.ar1 {
            super::ar1::check_rho(r)?;
        }
        let mut labels: Vec<String> = self.terms.iter().map(TermSpec::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(GamError::Config("duplicate terms".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("response = {}\n", self.response);
        for (i, t) in self.terms.iter().enumerate() {
            out.push_str(&format!("term.{} = {}\n", i + 1, t.to_text()));
        }
        out.push_str(&format!("ar1 = {}\n", self.ar1));
        out.push_str(&format!("series_start = {}\n", self.series_start.as_deref().unwrap_or("none")));
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GamError> {
        let mut spec = ModelSpec { response: String::new(), terms: Vec::new(), ar1: Ar1::Off, series_start: None };
        for (i, line) in text.lines().enumerate() {
            let err = |m: String| GamError::Config(format!("model spec line {}: {m}", i + 1));
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "response" => spec.response = value.to_string(),
                "ar1" => {
                    spec.ar1 = match value {
                        "estimate" => Ar1::Estimate,
                        "off" => Ar1::Off,
                        v => Ar1::Fixed(v.parse().map_err(|_| err(format!("bad ar1 \"{v}\"")))?),
                    }
                }
                "series_start" => spec.series_start = (value != "none").then(|| value.to_string()),
                k if k.starts_with("term.") => spec.terms.push(TermSpec::from_text(value).map_err(err)?),
                other => return Err(err(format!("unknown key \"{other}\""))),
            }
        }
        if spec.response.is_empty() {
            return Err(GamError::Config("model spec has no response".into()));
        }
        spec.validate()?;
        Ok(spec)
    }
}
