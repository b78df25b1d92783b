use nalgebra::DVector;
use statrs::distribution::{ContinuousCDF, Normal};

use super::frame::DataFrame;
use super::model::FittedModel;
use super::GamError;

/// Pointwise estimate with standard error and symmetric band.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub estimate: Vec<f64>,
    pub se: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Two-sided normal critical value for a coverage `level`.
pub fn critical_value(level: f64) -> Result<f64, GamError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(GamError::Config(format!("confidence level {level} is not in (0, 1)")));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(0.5 + 0.5 * level))
}

/// Estimates and bands for linear combinations `c'β`.
pub fn contrast_curve(model: &FittedModel, rows: &[DVector<f64>], level: f64) -> Result<Curve, GamError> {
    let z = critical_value(level)?;
    let mut c = Curve { estimate: Vec::new(), se: Vec::new(), lower: Vec::new(), upper: Vec::new() };
    for r in rows {
        let est = r.dot(&model.coefficients);
        let var = (r.transpose() * &model.posterior_cov * r)[(0, 0)];
        let se = var.max(0.0).sqrt();
        c.estimate.push(est);
        c.se.push(se);
        c.lower.push(est - z * se);
        c.upper.push(est + z * se);
    }
    Ok(c)
}

/// Prediction on `newdata` using only the terms in `include` (labels as in
/// the model layout, e.g. `"(Intercept)"`, `"s(time)"`).
pub fn predict_with_ci(model: &FittedModel, newdata: &DataFrame, include: &[&str], level: f64) -> Result<Curve, GamError> {
    let mask = model.layout.mask(include)?;
    let builder = model.layout.row_builder_for(newdata, include)?;
    let rows = (0..newdata.n_rows()).map(|i| builder.dense_row(i, Some(&mask))).collect::<Result<Vec<_>, _>>()?;
    contrast_curve(model, &rows, level)
}
