//! Targeted rectifiers that match finite-dimensional moments of the score.

use crate::error::{Error, Result};
use crate::measures::{AtomicMeasure, LabeledSample};

use super::FittedRectifier;

/// Shift `c = P_m y − P_base ŷ`, so the rectified base mean equals the
/// calibration mean.
pub fn fit_moment_shift(calib: &LabeledSample, base: &AtomicMeasure) -> Result<FittedRectifier> {
    let y = calib.outcomes().as_real()?;
    let calib_mean = y.iter().sum::<f64>() / y.len() as f64;
    let shift = calib_mean - base.mean_outcome()?;
    Ok(FittedRectifier::MomentShift { shift })
}

/// Moment system for the affine rectifier `ŷ ↦ a + bŷ` with `z = (1, x)`:
/// row `r` is `[P_base z_r, P_base(z_r ŷ)]` with target `P_m(z_r y)`.
pub fn moment_system(
    calib: &LabeledSample,
    base: &AtomicMeasure,
) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
    let y = calib.outcomes().as_real()?;
    let yhat = base.outcomes().as_real()?;
    let d = base.covariates().cols();
    if calib.covariates().cols() != d {
        return Err(Error::mismatch(
            "calibration and base covariates differ in width",
        ));
    }
    let mut rows = vec![[0.0; 2]; d + 1];
    let mut target = vec![0.0; d + 1];
    let bx = base.covariates();
    for (i, (&w, &yh)) in base.weights().iter().zip(yhat).enumerate() {
        rows[0][0] += w;
        rows[0][1] += w * yh;
        for (r, &xr) in bx.row(i).iter().enumerate() {
            rows[r + 1][0] += w * xr;
            rows[r + 1][1] += w * xr * yh;
        }
    }
    let m = y.len() as f64;
    let cx = calib.covariates();
    for (i, &yi) in y.iter().enumerate() {
        target[0] += yi / m;
        for (r, &xr) in cx.row(i).iter().enumerate() {
            target[r + 1] += xr * yi / m;
        }
    }
    Ok((rows, target))
}

/// Least-squares affine rectifier on the stacked moment system. A
/// rank-deficient system (constant ŷ under the base, or covariates that only
/// replicate the intercept moment) falls back to the pure shift.
pub fn fit_moment_affine(calib: &LabeledSample, base: &AtomicMeasure) -> Result<FittedRectifier> {
    let (rows, target) = moment_system(calib, base)?;
    let (mut g00, mut g01, mut g11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (row, t) in rows.iter().zip(&target) {
        g00 += row[0] * row[0];
        g01 += row[0] * row[1];
        g11 += row[1] * row[1];
        r0 += row[0] * t;
        r1 += row[1] * t;
    }
    let det = g00 * g11 - g01 * g01;
    if !(det > 1e-10 * g00 * g11) {
        let FittedRectifier::MomentShift { shift } = fit_moment_shift(calib, base)? else {
            unreachable!()
        };
        return Ok(FittedRectifier::MomentAffine {
            intercept: shift,
            slope: 1.0,
            fallback: true,
        });
    }
    let intercept = (g11 * r0 - g01 * r1) / det;
    let slope = (g00 * r1 - g01 * r0) / det;
    Ok(FittedRectifier::MomentAffine {
        intercept,
        slope,
        fallback: false,
    })
}
