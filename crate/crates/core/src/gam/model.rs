use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::ar1::estimate_rho;
use super::design::{build_design, Design, DesignLayout};
use super::frame::DataFrame;
use super::reml::{fit_reml_with, RemlFit, RemlOptions};
use super::spec::{Ar1, ModelSpec};
use super::GamError;

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub layout: DesignLayout,
    pub coefficients: DVector<f64>,
    pub penalty_labels: Vec<String>,
    pub lambda: Vec<f64>,
    pub rho: f64,
    pub scale: f64,
    pub posterior_cov: DMatrix<f64>,
    /// Effective degrees of freedom per term, in layout order.
    pub term_edf: Vec<(String, f64)>,
    pub total_edf: f64,
    pub reml_score: f64,
    pub n: usize,
    pub evaluations: usize,
    /// Fitted values on the response scale, one per data row.
    pub fitted: Vec<f64>,
}

impl FittedModel {
    fn from_fit(design: &Design, spec: &ModelSpec, fit: RemlFit, rho: f64, evaluations: usize) -> Self {
        let term_edf = design.layout.terms.iter().map(|t| (t.label.clone(), t.columns.iter().map(|&c| fit.edf[c]).sum())).collect();
        let fitted = design.fitted(&fit.coefficients);
        Self {
            spec: spec.clone(),
            layout: design.layout.clone(),
            penalty_labels: design.penalties.iter().map(|p| p.label.clone()).collect(),
            total_edf: fit.total_edf(),
            coefficients: fit.coefficients,
            lambda: fit.lambda,
            rho,
            scale: fit.scale,
            posterior_cov: fit.posterior_cov,
            term_edf,
            reml_score: fit.reml_score,
            n: design.y.len(),
            evaluations,
            fitted,
        }
    }

    pub fn residuals(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.fitted).map(|(a, b)| a - b).collect()
    }

    /// Tab-separated dump of the fit for external checking.
    pub fn dump(&self) -> String {
        let mut out = String::from("section\tname\tvalue\n");
        let _ = writeln!(out, "fit\tn\t{}", self.n);
        let _ = writeln!(out, "fit\trho\t{}", self.rho);
        let _ = writeln!(out, "fit\tscale\t{}", self.scale);
        let _ = writeln!(out, "fit\treml_score\t{}", self.reml_score);
        let _ = writeln!(out, "fit\ttotal_edf\t{}", self.total_edf);
        for (label, l) in self.penalty_labels.iter().zip(&self.lambda) {
            let _ = writeln!(out, "lambda\t{label}\t{l}");
        }
        for (label, e) in &self.term_edf {
            let _ = writeln!(out, "edf\t{label}\t{e}");
        }
        for (label, b) in self.layout.coef_labels.iter().zip(self.coefficients.iter()) {
            let _ = writeln!(out, "coef\t{label}\t{b}");
        }
        out
    }
}

pub fn fit_model(frame: &DataFrame, spec: &ModelSpec) -> Result<FittedModel, GamError> {
    fit_model_with(frame, spec, &RemlOptions::default())
}

/// Builds the design and fits it. With `Ar1::Estimate`, rho comes from the
/// within-trajectory lag-1 correlation of a preliminary uncorrelated fit
/// and is then held fixed for the final fit.
pub fn fit_model_with(frame: &DataFrame, spec: &ModelSpec, opts: &RemlOptions) -> Result<FittedModel, GamError> {
    let design = build_design(frame, spec)?;
    fit_design(&design, spec, opts)
}

pub fn fit_design(design: &Design, spec: &ModelSpec, opts: &RemlOptions) -> Result<FittedModel, GamError> {
    let (rho, mut evaluations) = match spec.ar1 {
        Ar1::Off => (0.0, 0),
        Ar1::Fixed(r) => (r, 0),
        Ar1::Estimate => {
            let pre = fit_reml_with(&design.gram(0.0)?, &design.penalties, None, opts)?;
            let fitted = design.fitted(&pre.coefficients);
            let resid: Vec<f64> = design.y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
            (estimate_rho(&resid, &design.starts)?, pre.evaluations)
        }
    };
    let fit = fit_reml_with(&design.gram(rho)?, &design.penalties, None, opts)?;
    evaluations += fit.evaluations;
    Ok(FittedModel::from_fit(design, spec, fit, rho, evaluations))
}

/// Fits with the given smoothing parameters (no search) and no AR1.
pub fn fit_design_fixed(design: &Design, spec: &ModelSpec, lambda: &[f64], rho: f64) -> Result<FittedModel, GamError> {
    let fit = fit_reml_with(&design.gram(rho)?, &design.penalties, Some(lambda), &RemlOptions::default())?;
    Ok(FittedModel::from_fit(design, spec, fit, rho, 1))
}
