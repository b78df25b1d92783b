//! Gaussian penalized additive models: cubic B-spline smooths, by-factor
//! smooths, factor smooths and random effects, AR(1) residuals by
//! whitening, and REML smoothing parameter selection.

mod ar1;
mod basis;
mod design;
mod frame;
mod model;
mod predict;
mod reml;
mod spec;

use thiserror::Error;

pub use ar1::{ar1_precision, ar1_whiten, check_rho, estimate_rho, MIN_RHO_PAIRS};
pub use basis::{bspline_row, build_basis, difference_penalty, null_basis, raw_design, BasisBlock};
pub use design::{build_design, Design, DesignLayout, RowBuilder, SparseRows, TermLayout, INTERCEPT};
pub use frame::{Column, DataFrame};
pub use model::{fit_design, fit_design_fixed, fit_model, fit_model_with, FittedModel};
pub use predict::{contrast_curve, critical_value, predict_with_ci, Curve};
pub use reml::{fit_reml, fit_reml_with, reml_score, Gram, Penalty, RemlFit, RemlOptions};
pub use spec::{Ar1, ModelSpec, TermKind, TermSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GamError {
    #[error("model configuration: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("column \"{0}\" not found")]
    MissingColumn(String),
    #[error("level \"{level}\" of \"{column}\" is not in the model")]
    UnknownLevel { column: String, level: String },
    #[error("term \"{0}\" is not in the model")]
    UnknownTerm(String),
    #[error("term {term}: factor \"{column}\" has a single observed level")]
    SingleLevel { term: String, column: String },
    #[error("covariate: {0}")]
    Covariate(String),
    #[error("penalized normal equations are rank deficient")]
    RankDeficient,
    #[error("smoothing parameter search did not converge in {evaluations} evaluations (best REML score {best_score}, lambda {best_lambda:?})")]
    NoConvergence { evaluations: usize, best_score: f64, best_lambda: Vec<f64> },
    #[error("only {0} within-trajectory residual pairs; at least 10 are needed to estimate rho")]
    TooFewPairs(usize),
    #[error("AR1 coefficient {0} is not in (-1, 1)")]
    InvalidRho(f64),
}
