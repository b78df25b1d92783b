//! Penalized least squares with REML smoothing parameter selection.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::GamError;

/// One smoothing-parameter penalty: `λ * Σ parts`, each part a square
/// block placed on the diagonal at its start column.
#[derive(Debug, Clone, PartialEq)]
pub struct Penalty {
    pub label: String,
    pub parts: Vec<(usize, DMatrix<f64>)>,
}

impl Penalty {
    pub fn new(label: impl Into<String>, parts: Vec<(usize, DMatrix<f64>)>) -> Self {
        Self { label: label.into(), parts }
    }

    /// Adds `lambda * S` into `target`.
    pub fn accumulate(&self, target: &mut DMatrix<f64>, lambda: f64) {
        for (start, m) in &self.parts {
            let q = m.nrows();
            let mut view = target.view_mut((*start, *start), (q, q));
            view += m * lambda;
        }
    }

    pub fn dense(&self, p: usize) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(p, p);
        self.accumulate(&mut s, 1.0);
        s
    }
}

/// Sufficient statistics of a Gaussian linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    pub xtx: DMatrix<f64>,
    pub xty: DVector<f64>,
    pub yty: f64,
    pub n: usize,
}

impl Gram {
    pub fn from_dense(x: &DMatrix<f64>, y: &DVector<f64>) -> Self {
        Self { xtx: x.transpose() * x, xty: x.transpose() * y, yty: y.dot(y), n: x.nrows() }
    }

    pub fn p(&self) -> usize {
        self.xty.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemlOptions {
    pub max_evaluations: usize,
    pub log_lambda_min: f64,
    pub log_lambda_max: f64,
}

impl Default for RemlOptions {
    fn default() -> Self {
        Self { max_evaluations: 2000, log_lambda_min: -12.0, log_lambda_max: 12.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemlFit {
    pub coefficients: DVector<f64>,
    pub lambda: Vec<f64>,
    /// Profiled residual variance.
    pub scale: f64,
    /// `(X'X + S_λ)⁻¹ · scale`.
    pub posterior_cov: DMatrix<f64>,
    /// Per-coefficient diagonal of `(X'X + S_λ)⁻¹ X'X`.
    pub edf: DVector<f64>,
    pub reml_score: f64,
    /// Dimension of the penalty null space.
    pub null_dim: usize,
    pub evaluations: usize,
    /// Whether the final factorization needed the ridge fallback.
    pub ridged: bool,
}

impl RemlFit {
    pub fn total_edf(&self) -> f64 {
        self.edf.sum()
    }
}

/// Connected group of penalized columns with an orthonormal basis of the
/// range of its summed penalties and one of their null space.
#[derive(Debug, Clone)]
struct Component {
    cols: Vec<usize>,
    range: DMatrix<f64>,
    null: DMatrix<f64>,
}

#[derive(Debug, Clone)]
struct Structure {
    comps: Vec<Component>,
    rank: usize,
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut c = i;
    while parent[c] != r {
        let next = parent[c];
        parent[c] = r;
        c = next;
    }
    r
}

fn structure(p: usize, penalties: &[&Penalty]) -> Structure {
    let mut parent: Vec<usize> = (0..p).collect();
    let mut penalized = vec![false; p];
    for pen in penalties {
        for (start, m) in &pen.parts {
            for c in *start..*start + m.nrows() {
                penalized[c] = true;
                let (a, b) = (find(&mut parent, *start), find(&mut parent, c));
                parent[b] = a;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for c in (0..p).filter(|&c| penalized[c]) {
        let root = find(&mut parent, c);
        groups.entry(root).or_default().push(c);
    }
    let mut unit = DMatrix::zeros(p, p);
    for pen in penalties {
        pen.accumulate(&mut unit, 1.0);
    }
    let mut rank = 0;
    let comps = groups
        .into_values()
        .filter_map(|cols| {
            let sub = unit.select_rows(&cols).select_columns(&cols);
            let eig = SymmetricEigen::new(sub);
            let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let (keep, drop): (Vec<usize>, Vec<usize>) = (0..cols.len()).partition(|&i| eig.eigenvalues[i] > 1e-9 * max);
            if keep.is_empty() {
                return None;
            }
            rank += keep.len();
            Some(Component { range: eig.eigenvectors.select_columns(&keep), null: eig.eigenvectors.select_columns(&drop), cols })
        })
        .collect();
    Structure { comps, rank }
}

/// Orthogonal change of coordinates that, inside each rank-deficient
/// component, puts the penalty range first and its null space after it.
/// The rotated penalties are exactly zero on the null coordinates, so a
/// huge λ cannot swamp `X'X` there when `X'X + S_λ` is formed.
#[derive(Debug, Clone, Default)]
struct Rotation {
    /// First column, `[range | null]` basis and the range dimension.
    blocks: Vec<(usize, DMatrix<f64>, usize)>,
}

impl Rotation {
    fn new(st: &Structure) -> Self {
        let blocks = st
            .comps
            .iter()
            .filter(|c| c.null.ncols() > 0 && c.cols.windows(2).all(|w| w[1] == w[0] + 1))
            .map(|c| {
                let (q, r) = (c.cols.len(), c.range.ncols());
                let mut basis = DMatrix::zeros(q, q);
                basis.columns_mut(0, r).copy_from(&c.range);
                basis.columns_mut(r, q - r).copy_from(&c.null);
                (c.cols[0], basis, r)
            })
            .collect();
        Self { blocks }
    }

    /// `Q' M Q`.
    fn forward_sym(&self, m: &mut DMatrix<f64>) {
        for (s, b, _) in &self.blocks {
            let q = b.nrows();
            let c = m.columns(*s, q) * b;
            m.columns_mut(*s, q).copy_from(&c);
            let r = b.transpose() * m.rows(*s, q);
            m.rows_mut(*s, q).copy_from(&r);
        }
    }

    /// `Q M Q'`.
    fn back_sym(&self, m: &mut DMatrix<f64>) {
        for (s, b, _) in &self.blocks {
            let q = b.nrows();
            let c = m.columns(*s, q) * b.transpose();
            m.columns_mut(*s, q).copy_from(&c);
            let r = b * m.rows(*s, q);
            m.rows_mut(*s, q).copy_from(&r);
        }
    }

    fn forward_vec(&self, v: &mut DVector<f64>) {
        for (s, b, _) in &self.blocks {
            let r = b.transpose() * v.rows(*s, b.nrows());
            v.rows_mut(*s, b.nrows()).copy_from(&r);
        }
    }

    fn back_vec(&self, v: &mut DVector<f64>) {
        for (s, b, _) in &self.blocks {
            let r = b * v.rows(*s, b.nrows());
            v.rows_mut(*s, b.nrows()).copy_from(&r);
        }
    }

    fn gram(&self, g: &Gram) -> Gram {
        let mut out = g.clone();
        self.forward_sym(&mut out.xtx);
        self.forward_vec(&mut out.xty);
        out
    }

    /// Parts inside a rotated block become one range-only part.
    fn penalty(&self, pen: &Penalty) -> Penalty {
        let mut parts = Vec::new();
        let mut local: Vec<Option<DMatrix<f64>>> = vec![None; self.blocks.len()];
        for (start, m) in &pen.parts {
            match self.blocks.iter().position(|(s, b, _)| *start >= *s && *start < s + b.nrows()) {
                Some(i) => {
                    let q = self.blocks[i].1.nrows();
                    let acc = local[i].get_or_insert_with(|| DMatrix::zeros(q, q));
                    let mut view = acc.view_mut((start - self.blocks[i].0, start - self.blocks[i].0), (m.nrows(), m.nrows()));
                    view += m;
                }
                None => parts.push((*start, m.clone())),
            }
        }
        for ((s, b, r), acc) in self.blocks.iter().zip(local) {
            if let Some(acc) = acc {
                let range = b.columns(0, *r);
                let m = range.transpose() * acc * range;
                parts.push((*s, (&m + m.transpose()) * 0.5));
            }
        }
        Penalty::new(pen.label.clone(), parts)
    }
}

/// The problem in rotated coordinates.
struct Rotated {
    rot: Rotation,
    gram: Gram,
    penalties: Vec<Penalty>,
}

fn rotate(gram: &Gram, penalties: &[&Penalty]) -> Rotated {
    let rot = Rotation::new(&structure(gram.p(), penalties));
    let penalties = penalties.iter().map(|p| rot.penalty(p)).collect();
    Rotated { gram: rot.gram(gram), penalties, rot }
}

fn logdet_chol(ch: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

fn penalty_logdet(s: &DMatrix<f64>, st: &Structure) -> f64 {
    st.comps
        .iter()
        .map(|c| {
            let sub = s.select_rows(&c.cols).select_columns(&c.cols);
            let m = c.range.transpose() * sub * &c.range;
            match Cholesky::new(m.clone()) {
                Some(ch) => logdet_chol(&ch),
                None => SymmetricEigen::new(m).eigenvalues.iter().filter(|v| **v > 0.0).map(|v| v.ln()).sum(),
            }
        })
        .sum()
}

/// Cholesky of `A`, retrying once with a `1e-10 · trace` ridge.
fn factor(a: DMatrix<f64>) -> Option<(Cholesky<f64, Dyn>, bool)> {
    if let Some(ch) = Cholesky::new(a.clone()) {
        return Some((ch, false));
    }
    let ridge = 1e-10 * a.trace().abs().max(f64::MIN_POSITIVE);
    let p = a.nrows();
    Cholesky::new(a + DMatrix::identity(p, p) * ridge).map(|ch| (ch, true))
}

struct Eval {
    score: f64,
    beta: DVector<f64>,
    scale: f64,
    chol: Cholesky<f64, Dyn>,
    ridged: bool,
}

fn evaluate(gram: &Gram, penalties: &[&Penalty], lambda: &[f64], st: &Structure) -> Result<Eval, GamError> {
    let p = gram.p();
    let mut s = DMatrix::zeros(p, p);
    for (pen, &l) in penalties.iter().zip(lambda) {
        pen.accumulate(&mut s, l);
    }
    let (chol, ridged) = factor(&gram.xtx + &s).ok_or(GamError::RankDeficient)?;
    let beta = chol.solve(&gram.xty);
    let dof = gram.n as f64 - (p - st.rank) as f64;
    if dof <= 0.0 {
        return Err(GamError::Config(format!("{} observations cannot support {} unpenalized coefficients", gram.n, p - st.rank)));
    }
    // RSS + β'S_λβ = y'y − β'X'y at the penalized solution.
    let rss_pen = (gram.yty - beta.dot(&gram.xty)).max(f64::MIN_POSITIVE * gram.yty.max(1.0));
    let scale = rss_pen / dof;
    let score = 0.5 * dof * ((2.0 * std::f64::consts::PI * scale).ln() + 1.0) + 0.5 * logdet_chol(&chol)
        - 0.5 * penalty_logdet(&s, st);
    Ok(Eval { score, beta, scale, chol, ridged })
}

/// REML score at the given smoothing parameters.
pub fn reml_score(gram: &Gram, penalties: &[Penalty], lambda: &[f64]) -> Result<f64, GamError> {
    let refs: Vec<&Penalty> = penalties.iter().collect();
    let r = rotate(gram, &refs);
    let active: Vec<&Penalty> = r.penalties.iter().collect();
    let st = structure(gram.p(), &active);
    evaluate(&r.gram, &active, lambda, &st).map(|e| e.score)
}

/// Maps a rotated evaluation back to the original coordinates.
fn finish(gram: &Gram, rot: &Rotation, mut e: Eval, lambda: Vec<f64>, null_dim: usize, evaluations: usize) -> RemlFit {
    let mut ainv = e.chol.inverse();
    rot.back_sym(&mut ainv);
    rot.back_vec(&mut e.beta);
    let mut cov = &ainv * e.scale;
    cov = (&cov + cov.transpose()) * 0.5;
    let p = gram.p();
    let edf = DVector::from_fn(p, |i, _| ainv.row(i).dot(&gram.xtx.column(i).transpose()));
    RemlFit {
        coefficients: e.beta,
        lambda,
        scale: e.scale,
        posterior_cov: cov,
        edf,
        reml_score: e.score,
        null_dim,
        evaluations,
        ridged: e.ridged,
    }
}

pub fn fit_reml(gram: &Gram, penalties: &[Penalty], fixed_lambda: Option<&[f64]>) -> Result<RemlFit, GamError> {
    fit_reml_with(gram, penalties, fixed_lambda, &RemlOptions::default())
}

/// Fits with fixed smoothing parameters if given, otherwise minimizes the
/// REML score over `log λ` within the option bounds.
pub fn fit_reml_with(gram: &Gram, penalties: &[Penalty], fixed_lambda: Option<&[f64]>, opts: &RemlOptions) -> Result<RemlFit, GamError> {
    let p = gram.p();
    if let Some(fixed) = fixed_lambda {
        if fixed.len() != penalties.len() {
            return Err(GamError::Config(format!("{} smoothing parameters for {} penalties", fixed.len(), penalties.len())));
        }
        if let Some(bad) = fixed.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(GamError::Config(format!("smoothing parameter {bad} is not a non-negative number")));
        }
        let active: Vec<&Penalty> = penalties.iter().zip(fixed).filter(|(_, l)| **l > 0.0).map(|(p, _)| p).collect();
        let lam: Vec<f64> = fixed.iter().copied().filter(|l| *l > 0.0).collect();
        let r = rotate(gram, &active);
        let active: Vec<&Penalty> = r.penalties.iter().collect();
        let st = structure(p, &active);
        let e = evaluate(&r.gram, &active, &lam, &st)?;
        if e.ridged {
            return Err(GamError::RankDeficient);
        }
        return Ok(finish(gram, &r.rot, e, fixed.to_vec(), p - st.rank, 1));
    }

    let r = rotate(gram, &penalties.iter().collect::<Vec<_>>());
    let refs: Vec<&Penalty> = r.penalties.iter().collect();
    let st = structure(p, &refs);
    if penalties.is_empty() {
        let e = evaluate(gram, &refs, &[], &st)?;
        if e.ridged {
            return Err(GamError::RankDeficient);
        }
        return Ok(finish(gram, &r.rot, e, Vec::new(), p, 1));
    }
    let ctx = GradContext::new(&refs, &st);
    let mut search = Search { gram: &r.gram, refs: &refs, st: &st, ctx: &ctx, opts, evals: 0, best: (f64::INFINITY, Vec::new()) };
    let outcome = search.run();
    let (best_score, theta) = search.best.clone();
    let lambda: Vec<f64> = theta.iter().map(|t| t.exp()).collect();
    if outcome.is_err() || !best_score.is_finite() {
        return Err(GamError::NoConvergence { evaluations: search.evals, best_score, best_lambda: lambda });
    }
    let e = evaluate(&r.gram, &refs, &lambda, &st)?;
    Ok(finish(gram, &r.rot, e, lambda, p - st.rank, search.evals))
}

/// Penalty blocks projected onto each component's range basis; these do
/// not depend on λ.
struct GradContext {
    /// `[component][penalty]`, `None` when the penalty misses the component.
    projected: Vec<Vec<Option<DMatrix<f64>>>>,
}

impl GradContext {
    fn new(penalties: &[&Penalty], st: &Structure) -> Self {
        let p = st.comps.iter().flat_map(|c| c.cols.iter()).copied().max().map_or(0, |m| m + 1);
        let projected = st
            .comps
            .iter()
            .map(|c| {
                penalties
                    .iter()
                    .map(|pen| {
                        let touches = pen.parts.iter().any(|(s, m)| c.cols.iter().any(|&j| j >= *s && j < s + m.nrows()));
                        touches.then(|| {
                            let dense = pen.dense(p);
                            c.range.transpose() * dense.select_rows(&c.cols).select_columns(&c.cols) * &c.range
                        })
                    })
                    .collect()
            })
            .collect();
        Self { projected }
    }
}

/// Derivatives of the score with respect to `log λ`:
/// `½ λ_j (β'S_jβ / σ² + tr(A⁻¹S_j) − tr(S⁺S_j))`.
fn gradient(penalties: &[&Penalty], lambda: &[f64], ctx: &GradContext, e: &Eval) -> Vec<f64> {
    let ainv = e.chol.inverse();
    let mut g: Vec<f64> = penalties
        .iter()
        .zip(lambda)
        .map(|(pen, &l)| {
            let (mut quad, mut tr) = (0.0, 0.0);
            for (start, m) in &pen.parts {
                let q = m.nrows();
                let b = e.beta.rows(*start, q);
                quad += (b.transpose() * m * b)[(0, 0)];
                tr += ainv.view((*start, *start), (q, q)).component_mul(m).sum();
            }
            0.5 * l * (quad / e.scale + tr)
        })
        .collect();
    for comp in &ctx.projected {
        let mut m: Option<DMatrix<f64>> = None;
        for (t, &l) in comp.iter().zip(lambda) {
            if let Some(t) = t {
                m = Some(match m {
                    Some(acc) => acc + t * l,
                    None => t * l,
                });
            }
        }
        let Some(m) = m else { continue };
        let Some(minv) = m.try_inverse() else { continue };
        for (j, t) in comp.iter().enumerate() {
            if let Some(t) = t {
                g[j] -= 0.5 * lambda[j] * minv.component_mul(&t.transpose()).sum();
            }
        }
    }
    g
}

struct BudgetExhausted;

/// Box-constrained Newton iteration on `log λ` from the best point of a
/// coarse initial design. The Hessian is a forward difference of the
/// analytic gradient, made positive definite by flooring its eigenvalues.
struct Search<'a> {
    gram: &'a Gram,
    refs: &'a [&'a Penalty],
    st: &'a Structure,
    ctx: &'a GradContext,
    opts: &'a RemlOptions,
    evals: usize,
    best: (f64, Vec<f64>),
}

const FTOL: f64 = 1e-10;
const HESSIAN_STEP: f64 = 1e-4;
const MAX_STEP: f64 = 4.0;
const MAX_ITERATIONS: usize = 200;

impl Search<'_> {
    fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v.clamp(self.opts.log_lambda_min, self.opts.log_lambda_max)).collect()
    }

    fn tick(&mut self) -> Result<(), BudgetExhausted> {
        if self.evals >= self.opts.max_evaluations {
            return Err(BudgetExhausted);
        }
        self.evals += 1;
        Ok(())
    }

    fn eval_full(&mut self, x: &[f64]) -> Result<Option<Eval>, BudgetExhausted> {
        self.tick()?;
        let lam: Vec<f64> = x.iter().map(|t| t.exp()).collect();
        let e = evaluate(self.gram, self.refs, &lam, self.st).ok().filter(|e| e.score.is_finite());
        if let Some(e) = &e {
            if e.score < self.best.0 || self.best.1.is_empty() {
                self.best = (e.score, x.to_vec());
            }
        }
        Ok(e)
    }

    fn score(&mut self, x: &[f64]) -> Result<f64, BudgetExhausted> {
        Ok(self.eval_full(x)?.map_or(f64::INFINITY, |e| e.score))
    }

    fn score_grad(&mut self, x: &[f64]) -> Result<Option<(f64, Vec<f64>)>, BudgetExhausted> {
        Ok(self.eval_full(x)?.map(|e| {
            let lam: Vec<f64> = x.iter().map(|t| t.exp()).collect();
            (e.score, gradient(self.refs, &lam, self.ctx, &e))
        }))
    }

    fn run(&mut self) -> Result<(), BudgetExhausted> {
        let q = self.refs.len();
        let (lo, hi) = (self.opts.log_lambda_min, self.opts.log_lambda_max);
        let mid = 0.5 * (lo + hi);
        if q <= 3 {
            let levels = [lo, mid, hi];
            for idx in 0..3usize.pow(q as u32) {
                let x: Vec<f64> = (0..q).map(|i| levels[(idx / 3usize.pow(i as u32)) % 3]).collect();
                self.score(&x)?;
            }
        } else {
            self.score(&vec![mid; q])?;
            for i in 0..q {
                for d in [-8.0, 8.0] {
                    let mut x = vec![mid; q];
                    x[i] += d;
                    self.score(&x)?;
                }
            }
        }
        if !self.best.0.is_finite() {
            return Ok(());
        }
        let mut x = self.best.1.clone();
        for _ in 0..MAX_ITERATIONS {
            let Some((f, g)) = self.score_grad(&x)? else { return Ok(()) };
            // Coordinates held at a bound by a gradient pointing outward.
            let free: Vec<usize> = (0..q).filter(|&i| !((x[i] <= lo && g[i] > 0.0) || (x[i] >= hi && g[i] < 0.0))).collect();
            if free.is_empty() {
                return Ok(());
            }
            let mut h = DMatrix::zeros(free.len(), free.len());
            for (b, &j) in free.iter().enumerate() {
                let mut y = x.clone();
                let step = if y[j] + HESSIAN_STEP > hi { -HESSIAN_STEP } else { HESSIAN_STEP };
                y[j] += step;
                let Some((_, gy)) = self.score_grad(&y)? else { return Ok(()) };
                for (a, &i) in free.iter().enumerate() {
                    h[(a, b)] = (gy[i] - g[i]) / step;
                }
            }
            let h = (&h + h.transpose()) * 0.5;
            let eig = SymmetricEigen::new(h);
            let top = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let floor = (top * 1e-7).max(1e-12);
            let gf = DVector::from_iterator(free.len(), free.iter().map(|&i| g[i]));
            let coef = eig.eigenvectors.transpose() * &gf;
            let scaled = DVector::from_iterator(free.len(), coef.iter().zip(eig.eigenvalues.iter()).map(|(c, v)| c / v.abs().max(floor)));
            let mut d = -(&eig.eigenvectors * scaled);
            let longest = d.amax();
            if longest > MAX_STEP {
                d *= MAX_STEP / longest;
            }
            let predicted = -gf.dot(&d);
            if predicted.abs() <= FTOL * (1.0 + f.abs()) {
                return Ok(());
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..30 {
                let mut y = x.clone();
                for (a, &i) in free.iter().enumerate() {
                    y[i] += t * d[a];
                }
                let y = self.clamp(&y);
                let fy = self.score(&y)?;
                if fy < f {
                    accepted = Some((y, fy));
                    break;
                }
                t *= 0.5;
            }
            let Some((y, fy)) = accepted else { return Ok(()) };
            let moved = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            x = y;
            if f - fy <= FTOL * (1.0 + f.abs()) && moved < 1e-6 {
                return Ok(());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unpenalized_is_ols() {
        let x = DMatrix::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let y = DVector::from_vec(vec![1.0, 2.9, 5.1, 7.0, 9.2, 10.8]);
        let fit = fit_reml(&Gram::from_dense(&x, &y), &[], None).unwrap();
        let ols = (x.transpose() * &x).lu().solve(&(x.transpose() * &y)).unwrap();
        assert!((&fit.coefficients - ols).abs().max() < 1e-10);
        assert!((fit.total_edf() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn score_is_minimal_over_grid() {
        let n = 30;
        let x = DMatrix::from_fn(n, 3, |i, j| ((i * (j + 2)) as f64 * 0.37).sin());
        let y = DVector::from_fn(n, |i, _| (i as f64 * 0.2).cos() + 0.1 * ((i * 7) as f64).sin());
        let pen = Penalty::new("s", vec![(1, DMatrix::identity(2, 2))]);
        let g = Gram::from_dense(&x, &y);
        let fit = fit_reml(&g, std::slice::from_ref(&pen), None).unwrap();
        for t in [-12.0, -6.0, 0.0, 6.0, 12.0] {
            let s = reml_score(&g, std::slice::from_ref(&pen), &[f64::exp(t)]).unwrap();
            assert!(fit.reml_score <= s + 1e-12, "{t}: {} > {s}", fit.reml_score);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let n = 40;
        let x = DMatrix::from_fn(n, 5, |i, j| ((i * (j + 1)) as f64 * 0.29).cos());
        let y = DVector::from_fn(n, |i, _| (i as f64 * 0.15).sin() + 0.2 * ((i * 5) as f64).cos());
        let d = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let pens = vec![
            Penalty::new("a", vec![(1, d.clone())]),
            Penalty::new("b", vec![(1, DMatrix::from_element(3, 3, 1.0 / 3.0))]),
            Penalty::new("c", vec![(4, DMatrix::identity(1, 1))]),
        ];
        let g = Gram::from_dense(&x, &y);
        let refs: Vec<&Penalty> = pens.iter().collect();
        let st = structure(g.p(), &refs);
        let ctx = GradContext::new(&refs, &st);
        let theta = [0.3, -1.2, 2.0];
        let lam: Vec<f64> = theta.iter().map(|t: &f64| t.exp()).collect();
        let e = evaluate(&g, &refs, &lam, &st).unwrap();
        let grad = gradient(&refs, &lam, &ctx, &e);
        for j in 0..3 {
            let h = 1e-5;
            let at = |dt: f64| {
                let l: Vec<f64> = theta.iter().enumerate().map(|(i, t)| (t + if i == j { dt } else { 0.0 }).exp()).collect();
                reml_score(&g, &pens, &l).unwrap()
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            assert!((fd - grad[j]).abs() < 1e-6 * (1.0 + fd.abs()), "{j}: {fd} vs {}", grad[j]);
        }
    }

    #[test]
    fn covariance_is_symmetric_positive() {
        let n = 20;
        let x = DMatrix::from_fn(n, 4, |i, j| ((i + 1) as f64).powi(j as i32) / (n as f64).powi(j as i32));
        let y = DVector::from_fn(n, |i, _| (i as f64).sqrt());
        let pen = Penalty::new("s", vec![(2, DMatrix::identity(2, 2))]);
        let fit = fit_reml(&Gram::from_dense(&x, &y), &[pen], None).unwrap();
        let v = &fit.posterior_cov;
        assert!((v - v.transpose()).abs().max() < 1e-12);
        assert!(v.diagonal().iter().all(|d| *d > 0.0));
    }

    #[test]
    fn fixed_lambda_length_is_checked() {
        let x = DMatrix::identity(3, 3);
        let y = DVector::from_element(3, 1.0);
        let pen = Penalty::new("s", vec![(0, DMatrix::identity(3, 3))]);
        assert!(fit_reml(&Gram::from_dense(&x, &y), &[pen], Some(&[])).is_err());
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let x = DMatrix::from_fn(5, 2, |_, _| 1.0);
        let y = DVector::from_element(5, 1.0);
        assert!(matches!(fit_reml(&Gram::from_dense(&x, &y), &[], Some(&[])), Err(GamError::RankDeficient)));
    }
}
