//! Small dense helpers on top of nalgebra with explicit rank checks.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots below this fraction of the matching diagonal entry count as singular.
const PIVOT_RTOL: f64 = 1e-12;

/// Cholesky factorization of a symmetric positive-definite matrix, rejecting
/// numerically singular input.
pub(crate) fn cholesky(
    a: DMatrix<f64>,
    what: &str,
) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let diag: Vec<f64> = a.diagonal().iter().copied().collect();
    let scale = diag.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    if !(scale > 0.0) || a.iter().any(|v| !v.is_finite()) {
        return Err(Error::RankDeficient(format!(
            "{what} is zero or non-finite"
        )));
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::RankDeficient(format!("{what} is not positive definite")))?;
    let l = chol.l_dirty();
    for (i, d) in diag.iter().enumerate() {
        let piv = l[(i, i)] * l[(i, i)];
        if !(piv > PIVOT_RTOL * d.abs().max(PIVOT_RTOL * scale)) {
            return Err(Error::RankDeficient(format!(
                "{what} is singular (pivot {i})"
            )));
        }
    }
    Ok(chol)
}

pub(crate) fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    Ok(cholesky(a, what)?.solve(b))
}

/// General inverse with a relative singular-value floor.
pub(crate) fn inverse(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= 1e-12 * smax {
        return Err(Error::RankDeficient(format!(
            "{what} is singular (condition {:.3e})",
            smax / smin
        )));
    }
    svd.pseudo_inverse(0.0)
        .map_err(|e| Error::RankDeficient(format!("{what}: {e}")))
}
