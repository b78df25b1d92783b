//! Cubic B-splines on equally spaced knots over [0, 1] with difference
//! penalties, and the sum-to-zero constraint.

use nalgebra::{DMatrix, DVector};

use super::GamError;

/// Nonzero cubic B-spline values at `x`: four `(column, value)` pairs.
/// `k` basis functions cover [0, 1] with `k - 3` equal segments.
pub fn bspline_row(x: f64, k: usize) -> [(usize, f64); 4] {
    let nseg = k - 3;
    let h = 1.0 / nseg as f64;
    let j = ((x / h).floor().max(0.0) as usize).min(nseg - 1);
    let u = x / h - j as f64;
    let u2 = u * u;
    let u3 = u2 * u;
    [
        (j, (1.0 - u).powi(3) / 6.0),
        (j + 1, (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0),
        (j + 2, (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0),
        (j + 3, u3 / 6.0),
    ]
}

/// Dense uncentered basis, `x.len() × k`.
pub fn raw_design(x: &[f64], k: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(x.len(), k);
    for (i, &xi) in x.iter().enumerate() {
        for (c, v) in bspline_row(xi, k) {
            b[(i, c)] = v;
        }
    }
    b
}

/// `D'D` for the order-`m` difference matrix `D` ((k−m) × k).
pub fn difference_penalty(k: usize, m: usize) -> DMatrix<f64> {
    let mut d = DMatrix::<f64>::identity(k, k);
    for _ in 0..m {
        let r = d.nrows();
        d = DMatrix::from_fn(r - 1, k, |i, j| d[(i + 1, j)] - d[(i, j)]);
    }
    d.transpose() * d
}

/// Orthonormal basis (k × (k−1)) of the complement of `c`, from the
/// Householder reflection that maps `c` onto the first axis.
pub fn null_basis(c: &DVector<f64>) -> DMatrix<f64> {
    let k = c.len();
    let mut v = c.clone();
    let norm = c.norm();
    v[0] += if c[0] >= 0.0 { norm } else { -norm };
    let vv = v.dot(&v);
    let h = if vv > 0.0 { DMatrix::identity(k, k) - (&v * v.transpose()) * (2.0 / vv) } else { DMatrix::identity(k, k) };
    h.columns(1, k - 1).into_owned()
}

pub fn check_basis_args(k: usize, m: usize) -> Result<(), GamError> {
    if k < 3 {
        return Err(GamError::Config(format!("basis dimension k = {k} is below 3")));
    }
    if !(1..=2).contains(&m) {
        return Err(GamError::Config(format!("penalty order m = {m} must be 1 or 2")));
    }
    if k < 4 {
        return Err(GamError::Config("cubic B-splines need k >= 4".into()));
    }
    Ok(())
}

pub fn check_covariate(x: &[f64]) -> Result<(), GamError> {
    match x.iter().find(|v| !v.is_finite() || **v < -1e-9 || **v > 1.0 + 1e-9) {
        Some(bad) => Err(GamError::Covariate(format!("value {bad} is not a finite number in [0, 1]"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisBlock {
    /// n × (k−1) centered design.
    pub design: DMatrix<f64>,
    /// (k−1) × (k−1) penalty in the centered parametrization.
    pub penalty: DMatrix<f64>,
    /// k × (k−1) map from B-spline coefficients to centered ones.
    pub constraint: DMatrix<f64>,
}

/// Centered cubic B-spline basis of dimension `k` with an order-`m`
/// difference penalty. The constraint makes every column sum to zero over
/// `x`.
pub fn build_basis(x: &[f64], k: usize, m: usize) -> Result<BasisBlock, GamError> {
    check_basis_args(k, m)?;
    check_covariate(x)?;
    if x.is_empty() {
        return Err(GamError::Covariate("no covariate values".into()));
    }
    let raw = raw_design(x, k);
    let colsum = DVector::from_iterator(k, raw.column_iter().map(|c| c.sum()));
    let z = null_basis(&colsum);
    let s = difference_penalty(k, m);
    Ok(BasisBlock { design: &raw * &z, penalty: z.transpose() * s * &z, constraint: z })
}
