//! Model matrix assembly. Rows are stored sparsely; a model row has at most
//! a few dozen nonzeros regardless of the number of factor levels.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::ar1::{check_rho, whitening_weights};
use super::basis::{bspline_row, build_basis, check_basis_args, difference_penalty};
use super::frame::DataFrame;
use super::reml::{Gram, Penalty};
use super::spec::{ModelSpec, TermKind, TermSpec};
use super::GamError;

pub const INTERCEPT: &str = "(Intercept)";

#[derive(Debug, Clone, PartialEq)]
enum Block {
    Intercept,
    Parametric,
    /// Raw B-spline values times `transform` (k × q) give the columns.
    Smooth { transform: DMatrix<f64> },
    BySmooth { transform: DMatrix<f64> },
    FactorSmooth,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermLayout {
    pub label: String,
    pub spec: Option<TermSpec>,
    block: Block,
    /// Levels of the term's factor (parametric, random, by or group).
    pub levels: Vec<String>,
    /// Levels of the `by` factor of a factor smooth.
    pub by_levels: Vec<String>,
    /// Observed covariate range mapped onto [0, 1].
    pub covariate_range: (f64, f64),
    raw_start: usize,
    raw_len: usize,
    /// Final coefficient indices of this term, ascending.
    pub columns: Vec<usize>,
}

impl TermLayout {
    fn q(&self) -> usize {
        match &self.block {
            Block::Smooth { transform } | Block::BySmooth { transform } => transform.ncols(),
            _ => self.spec.as_ref().map_or(0, |s| s.k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignLayout {
    pub terms: Vec<TermLayout>,
    /// Raw column → final coefficient index; `None` for columns dropped as
    /// unidentifiable.
    keep: Vec<Option<usize>>,
    pub coef_labels: Vec<String>,
}

impl DesignLayout {
    pub fn n_coef(&self) -> usize {
        self.coef_labels.len()
    }

    pub fn term_index(&self, label: &str) -> Result<usize, GamError> {
        self.terms.iter().position(|t| t.label == label).ok_or_else(|| GamError::UnknownTerm(label.into()))
    }

    /// Coefficient mask for a set of term labels.
    pub fn mask(&self, include: &[&str]) -> Result<Vec<bool>, GamError> {
        let mut m = vec![false; self.n_coef()];
        for label in include {
            for &c in &self.terms[self.term_index(label)?].columns {
                m[c] = true;
            }
        }
        Ok(m)
    }

    pub fn row_builder<'a>(&'a self, frame: &'a DataFrame) -> Result<RowBuilder<'a>, GamError> {
        let srcs = self.terms.iter().map(|t| TermSource::resolve(t, frame).map(Some)).collect::<Result<_, _>>()?;
        Ok(RowBuilder { layout: self, srcs })
    }

    /// Row builder that only reads the columns of the listed terms; other
    /// terms contribute nothing to the rows.
    pub fn row_builder_for<'a>(&'a self, frame: &'a DataFrame, include: &[&str]) -> Result<RowBuilder<'a>, GamError> {
        let mut wanted = vec![false; self.terms.len()];
        for label in include {
            wanted[self.term_index(label)?] = true;
        }
        let srcs = self
            .terms
            .iter()
            .zip(wanted)
            .map(|(t, w)| if w { TermSource::resolve(t, frame).map(Some) } else { Ok(None) })
            .collect::<Result<_, _>>()?;
        Ok(RowBuilder { layout: self, srcs })
    }
}

struct FactorSource<'a> {
    name: &'a str,
    frame_levels: &'a [String],
    codes: &'a [usize],
    map: Vec<Option<usize>>,
}

impl<'a> FactorSource<'a> {
    fn new(frame: &'a DataFrame, name: &'a str, levels: &[String]) -> Result<Self, GamError> {
        let (frame_levels, codes) = frame.factor(name)?;
        let map = frame_levels.iter().map(|l| levels.iter().position(|m| m == l)).collect();
        Ok(Self { name, frame_levels, codes, map })
    }

    fn code(&self, i: usize) -> Result<usize, GamError> {
        let c = self.codes[i];
        self.map[c].ok_or_else(|| GamError::UnknownLevel { column: self.name.into(), level: self.frame_levels[c].clone() })
    }
}

struct TermSource<'a> {
    x: Option<&'a [f64]>,
    factor: Option<FactorSource<'a>>,
    by: Option<FactorSource<'a>>,
}

impl<'a> TermSource<'a> {
    fn resolve(t: &'a TermLayout, frame: &'a DataFrame) -> Result<Self, GamError> {
        let Some(spec) = &t.spec else {
            return Ok(Self { x: None, factor: None, by: None });
        };
        let x = if spec.is_spline() { Some(frame.numeric(&spec.covariate)?) } else { None };
        let factor = match spec.kind {
            TermKind::ParametricFactor | TermKind::RandomEffect => Some(FactorSource::new(frame, &spec.covariate, &t.levels)?),
            _ => match &spec.by_or_group {
                Some(g) => Some(FactorSource::new(frame, g, &t.levels)?),
                None => None,
            },
        };
        let by = match &spec.by {
            Some(b) => Some(FactorSource::new(frame, b, &t.by_levels)?),
            None => None,
        };
        Ok(Self { x, factor, by })
    }
}

/// Produces sparse model rows for the rows of a data frame.
pub struct RowBuilder<'a> {
    layout: &'a DesignLayout,
    srcs: Vec<Option<TermSource<'a>>>,
}

fn rescale(x: f64, (lo, hi): (f64, f64)) -> Result<f64, GamError> {
    let u = (x - lo) / (hi - lo);
    if !(-1e-9..=1.0 + 1e-9).contains(&u) {
        return Err(GamError::Covariate(format!("value {x} outside the fitted range [{lo}, {hi}]")));
    }
    Ok(u.clamp(0.0, 1.0))
}

impl RowBuilder<'_> {
    /// Appends the nonzeros of row `i` restricted to masked coefficients.
    pub fn row(&self, i: usize, mask: Option<&[bool]>, out: &mut Vec<(usize, f64)>) -> Result<(), GamError> {
        out.clear();
        for (t, src) in self.layout.terms.iter().zip(&self.srcs) {
            let Some(src) = src else { continue };
            let base = out.len();
            push_term(t, src, i, out)?;
            let mut w = base;
            for r in base..out.len() {
                let (raw, v) = out[r];
                if let Some(c) = self.layout.keep[t.raw_start + raw] {
                    if mask.is_none_or(|m| m[c]) {
                        out[w] = (c, v);
                        w += 1;
                    }
                }
            }
            out.truncate(w);
        }
        Ok(())
    }

    pub fn dense_row(&self, i: usize, mask: Option<&[bool]>) -> Result<DVector<f64>, GamError> {
        let mut buf = Vec::new();
        self.row(i, mask, &mut buf)?;
        let mut v = DVector::zeros(self.layout.n_coef());
        for (c, x) in buf {
            v[c] += x;
        }
        Ok(v)
    }
}

/// Pushes term-local raw `(column, value)` pairs for row `i`.
fn push_term(t: &TermLayout, src: &TermSource<'_>, i: usize, out: &mut Vec<(usize, f64)>) -> Result<(), GamError> {
    let spline = |k: usize| -> Result<[(usize, f64); 4], GamError> {
        let x = src.x.expect("spline term has a covariate")[i];
        Ok(bspline_row(rescale(x, t.covariate_range)?, k))
    };
    let code = |f: &Option<FactorSource<'_>>| f.as_ref().expect("factor term has a factor").code(i);
    match &t.block {
        Block::Intercept => out.push((0, 1.0)),
        Block::Parametric => {
            let c = code(&src.factor)?;
            if c > 0 {
                out.push((c - 1, 1.0));
            }
        }
        Block::Smooth { transform } | Block::BySmooth { transform } => {
            let offset = match t.block {
                Block::BySmooth { .. } => code(&src.factor)? * transform.ncols(),
                _ => 0,
            };
            let b = spline(transform.nrows())?;
            for j in 0..transform.ncols() {
                let v: f64 = b.iter().map(|&(r, bv)| bv * transform[(r, j)]).sum();
                out.push((offset + j, v));
            }
        }
        Block::FactorSmooth => {
            let k = t.q();
            let g = code(&src.factor)?;
            let b = if src.by.is_some() { code(&src.by)? } else { 0 };
            let offset = (b * t.levels.len() + g) * k;
            for (r, v) in spline(k)? {
                out.push((offset + r, v));
            }
        }
        Block::Random => out.push((code(&src.factor)?, 1.0)),
    }
    Ok(())
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRows {
    pub ptr: Vec<usize>,
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
    pub ncols: usize,
}

impl SparseRows {
    pub fn n_rows(&self) -> usize {
        self.ptr.len().saturating_sub(1)
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.ptr[i], self.ptr[i + 1]);
        (&self.idx[a..b], &self.val[a..b])
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows(), self.ncols);
        for i in 0..self.n_rows() {
            let (idx, val) = self.row(i);
            for (c, v) in idx.iter().zip(val) {
                m[(i, *c)] += v;
            }
        }
        m
    }

    pub fn mul(&self, beta: &DVector<f64>) -> Vec<f64> {
        (0..self.n_rows())
            .map(|i| {
                let (idx, val) = self.row(i);
                idx.iter().zip(val).map(|(c, v)| v * beta[*c]).sum()
            })
            .collect()
    }
}

/// An assembled model: sparse rows, response, trajectory starts and scaled
/// penalties.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub layout: DesignLayout,
    pub x: SparseRows,
    pub y: Vec<f64>,
    pub starts: Vec<bool>,
    pub penalties: Vec<Penalty>,
}

impl Design {
    /// Normal equations of the AR(1)-whitened system (`rho = 0`: plain).
    pub fn gram(&self, rho: f64) -> Result<Gram, GamError> {
        check_rho(rho)?;
        let p = self.x.ncols;
        let mut xtx = vec![0.0; p * p];
        let mut xty = vec![0.0; p];
        let mut yty = 0.0;
        let mut w: Vec<(usize, f64)> = Vec::new();
        for i in 0..self.x.n_rows() {
            let (a, b) = whitening_weights(rho, self.starts[i] || i == 0);
            w.clear();
            let (idx, val) = self.x.row(i);
            w.extend(idx.iter().zip(val).map(|(c, v)| (*c, a * v)));
            let mut yi = a * self.y[i];
            if b != 0.0 {
                let (pidx, pval) = self.x.row(i - 1);
                w.extend(pidx.iter().zip(pval).map(|(c, v)| (*c, -b * v)));
                yi -= b * self.y[i - 1];
                w.sort_unstable_by_key(|e| e.0);
                let mut k = 0;
                for r in 1..w.len() {
                    if w[r].0 == w[k].0 {
                        w[k].1 += w[r].1;
                    } else {
                        k += 1;
                        w[k] = w[r];
                    }
                }
                w.truncate(k + 1);
            }
            for (ia, &(ca, va)) in w.iter().enumerate() {
                xty[ca] += va * yi;
                let row = &mut xtx[ca * p..(ca + 1) * p];
                for &(cb, vb) in &w[ia..] {
                    row[cb] += va * vb;
                }
            }
            yty += yi * yi;
        }
        let mut m = DMatrix::from_row_slice(p, p, &xtx);
        for r in 0..p {
            for c in 0..r {
                let v = m[(c, r)] + m[(r, c)];
                m[(r, c)] = v;
                m[(c, r)] = v;
            }
        }
        Ok(Gram { xtx: m, xty: DVector::from_vec(xty), yty, n: self.y.len() })
    }

    pub fn fitted(&self, beta: &DVector<f64>) -> Vec<f64> {
        self.x.mul(beta)
    }
}

/// Eigen-reparametrizes a centered smooth so unpenalized directions become
/// explicit columns with exactly zero penalty.
fn reparametrize(z: &DMatrix<f64>, s: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(s.clone());
    let q = s.nrows();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let u = eig.eigenvectors.select_columns(&order);
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(
        q,
        order.iter().map(|&i| if eig.eigenvalues[i] > 1e-10 * max { eig.eigenvalues[i] } else { 0.0 }),
    ));
    (z * u, diag)
}

fn observed_levels(codes: &[usize]) -> usize {
    codes.iter().collect::<BTreeSet<_>>().len()
}

struct RawPenalty {
    term: usize,
    label: String,
    parts: Vec<(usize, DMatrix<f64>)>,
}

pub fn build_design(frame: &DataFrame, spec: &ModelSpec) -> Result<Design, GamError> {
    spec.validate()?;
    let n = frame.n_rows();
    if n == 0 {
        return Err(GamError::Data("empty data frame".into()));
    }
    let y = frame.numeric(&spec.response)?.to_vec();
    let starts = match &spec.series_start {
        Some(name) => frame.flag(name)?.to_vec(),
        None => vec![true; n],
    };

    let mut terms = vec![TermLayout {
        label: INTERCEPT.into(),
        spec: None,
        block: Block::Intercept,
        levels: Vec::new(),
        by_levels: Vec::new(),
        covariate_range: (0.0, 1.0),
        raw_start: 0,
        raw_len: 1,
        columns: Vec::new(),
    }];
    let mut raw_pens: Vec<RawPenalty> = Vec::new();
    let mut raw_p = 1;
    for ts in &spec.terms {
        let label = ts.label();
        let ti = terms.len();
        let multi_level = |name: &str| -> Result<(Vec<String>, usize), GamError> {
            let (levels, codes) = frame.factor(name)?;
            if observed_levels(codes) < 2 {
                return Err(GamError::SingleLevel { term: label.clone(), column: name.into() });
            }
            Ok((levels.to_vec(), levels.len()))
        };
        let mut range = (0.0, 1.0);
        if ts.is_spline() {
            check_basis_args(ts.k, ts.penalty_order)?;
            let x = frame.numeric(&ts.covariate)?;
            let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo) {
                return Err(GamError::Covariate(format!("{label}: covariate \"{}\" is constant", ts.covariate)));
            }
            range = (lo, hi);
        }
        let unit_x = || -> Vec<f64> {
            frame.numeric(&ts.covariate).expect("checked").iter().map(|&v| ((v - range.0) / (range.1 - range.0)).clamp(0.0, 1.0)).collect()
        };
        let (block, levels, by_levels, raw_len) = match ts.kind {
            TermKind::ParametricFactor => {
                let (levels, _) = frame.factor(&ts.covariate)?;
                (Block::Parametric, levels.to_vec(), Vec::new(), levels.len().saturating_sub(1))
            }
            TermKind::RandomEffect => {
                let (levels, _) = frame.factor(&ts.covariate)?;
                let l = levels.len();
                raw_pens.push(RawPenalty { term: ti, label: label.clone(), parts: vec![(0, DMatrix::identity(l, l))] });
                (Block::Random, levels.to_vec(), Vec::new(), l)
            }
            TermKind::Smooth | TermKind::ByFactorSmooth => {
                let basis = build_basis(&unit_x(), ts.k, ts.penalty_order)?;
                let (transform, pen) = reparametrize(&basis.constraint, &basis.penalty);
                let q = transform.ncols();
                if ts.kind == TermKind::Smooth {
                    raw_pens.push(RawPenalty { term: ti, label: label.clone(), parts: vec![(0, pen)] });
                    (Block::Smooth { transform }, Vec::new(), Vec::new(), q)
                } else {
                    let (levels, l) = multi_level(ts.by_or_group.as_deref().expect("validated"))?;
                    for (j, level) in levels.iter().enumerate() {
                        raw_pens.push(RawPenalty { term: ti, label: format!("{label}/{level}"), parts: vec![(j * q, pen.clone())] });
                    }
                    (Block::BySmooth { transform }, levels, Vec::new(), l * q)
                }
            }
            TermKind::FactorSmooth => {
                let (levels, g) = multi_level(ts.by_or_group.as_deref().expect("validated"))?;
                let (by_levels, b) = match &ts.by {
                    Some(name) => multi_level(name)?,
                    None => (Vec::new(), 1),
                };
                let k = ts.k;
                let d = difference_penalty(k, ts.penalty_order);
                let null = null_space_projector(&d);
                let curves = g * b;
                raw_pens.push(RawPenalty {
                    term: ti,
                    label: format!("{label}/wiggle"),
                    parts: (0..curves).map(|c| (c * k, d.clone())).collect(),
                });
                raw_pens.push(RawPenalty {
                    term: ti,
                    label: format!("{label}/null"),
                    parts: (0..curves).map(|c| (c * k, null.clone())).collect(),
                });
                (Block::FactorSmooth, levels, by_levels, curves * k)
            }
        };
        terms.push(TermLayout {
            label,
            spec: Some(ts.clone()),
            block,
            levels,
            by_levels,
            covariate_range: range,
            raw_start: raw_p,
            raw_len,
            columns: Vec::new(),
        });
        raw_p += raw_len;
    }

    // Raw rows with every column kept.
    let mut layout = DesignLayout { terms, keep: (0..raw_p).map(Some).collect(), coef_labels: vec![String::new(); raw_p] };
    let mut x = SparseRows { ptr: vec![0], idx: Vec::new(), val: Vec::new(), ncols: raw_p };
    let mut term_inf = vec![0.0f64; layout.terms.len()];
    {
        let builder = layout.row_builder(frame)?;
        let mut buf = Vec::new();
        let mut sums = vec![0.0; layout.terms.len()];
        let col_term: Vec<usize> =
            layout.terms.iter().enumerate().flat_map(|(ti, t)| std::iter::repeat_n(ti, t.raw_len)).collect();
        for i in 0..n {
            builder.row(i, None, &mut buf)?;
            sums.iter_mut().for_each(|s| *s = 0.0);
            for &(c, v) in &buf {
                sums[col_term[c]] += v.abs();
                x.idx.push(c);
                x.val.push(v);
            }
            x.ptr.push(x.idx.len());
            for (m, s) in term_inf.iter_mut().zip(&sums) {
                *m = m.max(*s);
            }
        }
    }

    // Scale each penalty to the magnitude of its term's model matrix.
    let mut penalties: Vec<Penalty> = raw_pens
        .into_iter()
        .map(|rp| {
            let start = layout.terms[rp.term].raw_start;
            let s_norm = rp.parts.iter().map(|(_, m)| m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max)).fold(0.0, f64::max);
            let scale = if s_norm > 0.0 && term_inf[rp.term] > 0.0 { term_inf[rp.term].powi(2) / s_norm } else { 1.0 };
            Penalty::new(rp.label, rp.parts.into_iter().map(|(o, m)| (start + o, m * scale)).collect())
        })
        .collect();

    let keep = identifiable_columns(&x, &penalties, raw_p);
    if keep.iter().any(Option::is_none) {
        x = compact_rows(&x, &keep);
        penalties = penalties.into_iter().map(|p| compact_penalty(p, &keep)).filter(|p| !p.parts.is_empty()).collect();
    }
    let n_coef = keep.iter().flatten().count();
    for t in &mut layout.terms {
        t.columns = (t.raw_start..t.raw_start + t.raw_len).filter_map(|c| keep[c]).collect();
    }
    layout.keep = keep;
    layout.coef_labels = coefficient_labels(&layout, n_coef);
    Ok(Design { layout, x, y, starts, penalties })
}

/// Drops unpenalized columns that are (numerically) linear combinations of
/// earlier unpenalized columns.
/// Projector onto the null space of a difference penalty, i.e. the
/// polynomial directions it leaves unpenalized.
fn null_space_projector(s: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = nalgebra::SymmetricEigen::new(s.clone());
    let max = eig.eigenvalues.amax();
    let k = s.nrows();
    let mut p = DMatrix::zeros(k, k);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v <= 1e-9 * max {
            let u = eig.eigenvectors.column(i);
            p += &u * u.transpose();
        }
    }
    p
}

fn identifiable_columns(x: &SparseRows, penalties: &[Penalty], p: usize) -> Vec<Option<usize>> {
    let mut penalized = vec![false; p];
    for pen in penalties {
        for (start, m) in &pen.parts {
            for r in 0..m.nrows() {
                if m.row(r).iter().any(|v| *v != 0.0) {
                    penalized[start + r] = true;
                }
            }
        }
    }
    let free: Vec<usize> = (0..p).filter(|&c| !penalized[c]).collect();
    let pos: Vec<Option<usize>> = {
        let mut v = vec![None; p];
        for (i, &c) in free.iter().enumerate() {
            v[c] = Some(i);
        }
        v
    };
    let m = free.len();
    let mut g = DMatrix::<f64>::zeros(m, m);
    let mut buf: Vec<(usize, f64)> = Vec::new();
    for i in 0..x.n_rows() {
        let (idx, val) = x.row(i);
        buf.clear();
        buf.extend(idx.iter().zip(val).filter_map(|(c, v)| pos[*c].map(|j| (j, *v))));
        for &(a, va) in &buf {
            for &(b, vb) in &buf {
                g[(a, b)] += va * vb;
            }
        }
    }
    let max_diag = (0..m).map(|i| g[(i, i)]).fold(0.0, f64::max);
    let mut accepted: Vec<usize> = Vec::new();
    let mut dropped = vec![false; p];
    for j in 0..m {
        let gjj = g[(j, j)];
        let keep = if gjj <= 1e-12 * max_diag {
            false
        } else if accepted.is_empty() {
            true
        } else {
            let gaa = g.select_rows(&accepted).select_columns(&accepted);
            let gaj = DVector::from_iterator(accepted.len(), accepted.iter().map(|&a| g[(a, j)]));
            match gaa.lu().solve(&gaj) {
                Some(coef) => gjj - gaj.dot(&coef) > 1e-9 * gjj,
                None => false,
            }
        };
        if keep {
            accepted.push(j);
        } else {
            dropped[free[j]] = true;
        }
    }
    let mut next = 0;
    (0..p)
        .map(|c| {
            (!dropped[c]).then(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

fn compact_rows(x: &SparseRows, keep: &[Option<usize>]) -> SparseRows {
    let mut out = SparseRows { ptr: vec![0], idx: Vec::new(), val: Vec::new(), ncols: keep.iter().flatten().count() };
    for i in 0..x.n_rows() {
        let (idx, val) = x.row(i);
        for (c, v) in idx.iter().zip(val) {
            if let Some(k) = keep[*c] {
                out.idx.push(k);
                out.val.push(*v);
            }
        }
        out.ptr.push(out.idx.len());
    }
    out
}

fn compact_penalty(p: Penalty, keep: &[Option<usize>]) -> Penalty {
    let parts = p
        .parts
        .into_iter()
        .filter_map(|(start, m)| {
            let local: Vec<usize> = (0..m.nrows()).filter(|&r| keep[start + r].is_some()).collect();
            let first = keep[start + *local.first()?]?;
            Some((first, m.select_rows(&local).select_columns(&local)))
        })
        .collect();
    Penalty { label: p.label, parts }
}

fn coefficient_labels(layout: &DesignLayout, n_coef: usize) -> Vec<String> {
    let mut labels = vec![String::new(); n_coef];
    for t in &layout.terms {
        for raw in 0..t.raw_len {
            let Some(c) = layout.keep[t.raw_start + raw] else { continue };
            labels[c] = match &t.block {
                Block::Intercept => t.label.clone(),
                Block::Parametric => format!("{}[{}]", t.label, t.levels[raw + 1]),
                Block::Random => format!("{}[{}]", t.label, t.levels[raw]),
                Block::Smooth { .. } => format!("{}[{}]", t.label, raw + 1),
                Block::BySmooth { .. } => {
                    let q = t.q();
                    format!("{}[{},{}]", t.label, t.levels[raw / q], raw % q + 1)
                }
                Block::FactorSmooth => {
                    let k = t.q();
                    let curve = raw / k;
                    let g = &t.levels[curve % t.levels.len()];
                    match t.by_levels.get(curve / t.levels.len()) {
                        Some(b) if !t.by_levels.is_empty() => format!("{}[{g},{b},{}]", t.label, raw % k + 1),
                        _ => format!("{}[{g},{}]", t.label, raw % k + 1),
                    }
                }
            };
        }
    }
    labels
}
