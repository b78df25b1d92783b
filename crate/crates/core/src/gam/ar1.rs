//! AR(1) residual handling: lag-1 estimation within trajectories and the
//! whitening transform.

use nalgebra::{DMatrix, DVector};

use super::GamError;

/// Minimum number of within-trajectory residual pairs for [`estimate_rho`].
pub const MIN_RHO_PAIRS: usize = 10;

/// Lag-1 correlation over adjacent residual pairs that do not cross a
/// trajectory start.
pub fn estimate_rho(residuals: &[f64], starts: &[bool]) -> Result<f64, GamError> {
    assert_eq!(residuals.len(), starts.len());
    let (mut sxy, mut sxx, mut syy, mut pairs) = (0.0, 0.0, 0.0, 0usize);
    for i in 1..residuals.len() {
        if starts[i] {
            continue;
        }
        let (a, b) = (residuals[i - 1], residuals[i]);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
        pairs += 1;
    }
    if pairs < MIN_RHO_PAIRS {
        return Err(GamError::TooFewPairs(pairs));
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

pub fn check_rho(rho: f64) -> Result<(), GamError> {
    if rho.is_finite() && rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(GamError::InvalidRho(rho))
    }
}

/// Row weights of the whitening transform: row `i` becomes
/// `a_i * row_i - b_i * row_{i-1}`.
pub(crate) fn whitening_weights(rho: f64, start: bool) -> (f64, f64) {
    if start {
        ((1.0 - rho * rho).sqrt(), 0.0)
    } else {
        (1.0, rho)
    }
}

/// Dense whitening of `(X, y)`. Rows are grouped by trajectory and time
/// ordered; `starts[i]` marks the first row of a trajectory. Row 0 is always
/// treated as a start.
pub fn ar1_whiten(x: &DMatrix<f64>, y: &DVector<f64>, rho: f64, starts: &[bool]) -> Result<(DMatrix<f64>, DVector<f64>), GamError> {
    check_rho(rho)?;
    assert_eq!(x.nrows(), y.len());
    assert_eq!(starts.len(), y.len());
    if rho == 0.0 {
        return Ok((x.clone(), y.clone()));
    }
    let mut xw = x.clone();
    let mut yw = y.clone();
    for i in 0..y.len() {
        let (a, b) = whitening_weights(rho, starts[i] || i == 0);
        if b == 0.0 {
            xw.row_mut(i).scale_mut(a);
            yw[i] = a * y[i];
        } else {
            let row = x.row(i) * a - x.row(i - 1) * b;
            xw.row_mut(i).copy_from(&row);
            yw[i] = a * y[i] - b * y[i - 1];
        }
    }
    Ok((xw, yw))
}

/// Inverse of the AR(1) correlation matrix for consecutive trajectories
/// (block diagonal, tridiagonal blocks).
pub fn ar1_precision(rho: f64, starts: &[bool]) -> DMatrix<f64> {
    let n = starts.len();
    let mut q = DMatrix::zeros(n, n);
    let c = 1.0 / (1.0 - rho * rho);
    for i in 0..n {
        let first = starts[i] || i == 0;
        let last = i + 1 == n || starts[i + 1];
        q[(i, i)] = if first || last { c } else { c * (1.0 + rho * rho) };
        if first && last {
            q[(i, i)] = 1.0;
        }
        if !last {
            q[(i, i + 1)] = -rho * c;
            q[(i + 1, i)] = -rho * c;
        }
    }
    q
}
