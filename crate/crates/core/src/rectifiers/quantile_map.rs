use crate::error::{Error, Result};

use super::FittedRectifier;

/// Empirical quantile mapping `y ↦ F̂_Y⁻¹(F̂_Ŷ(y))`.
///
/// `F̂_Ŷ(y) = #{ŷ_i ≤ y}/m` is right-continuous and `F̂_Y⁻¹(u)` is the
/// `⌈u·m⌉`-th order statistic of the true outcomes, with `u = 0` mapped to the
/// minimum. Since `⌈(j/m)·m⌉ = j`, the map is evaluated with the integer count
/// directly.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileMap {
    imputed: Vec<f64>,
    truth: Vec<f64>,
}

impl QuantileMap {
    pub fn from_sorted(imputed: Vec<f64>, truth: Vec<f64>) -> Result<Self> {
        if imputed.len() != truth.len() || imputed.is_empty() {
            return Err(Error::param(
                "quantile grids must be nonempty and of equal length",
            ));
        }
        let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
        if !sorted(&imputed) || !sorted(&truth) {
            return Err(Error::param("quantile grids must be sorted"));
        }
        Ok(Self { imputed, truth })
    }

    pub fn imputed_grid(&self) -> &[f64] {
        &self.imputed
    }

    pub fn true_grid(&self) -> &[f64] {
        &self.truth
    }

    #[inline]
    pub fn apply(&self, y: f64) -> f64 {
        let count = self.imputed.partition_point(|&v| v <= y);
        self.truth[count.max(1) - 1]
    }
}

pub fn fit_quantile_map(calib_true: &[f64], calib_imputed: &[f64]) -> Result<FittedRectifier> {
    if calib_true.len() != calib_imputed.len() {
        return Err(Error::param(format!(
            "{} true outcomes but {} imputations",
            calib_true.len(),
            calib_imputed.len()
        )));
    }
    if calib_true.is_empty() {
        return Err(Error::param(
            "quantile map needs at least one calibration pair",
        ));
    }
    let mut imputed = calib_imputed.to_vec();
    let mut truth = calib_true.to_vec();
    imputed.sort_unstable_by(f64::total_cmp);
    truth.sort_unstable_by(f64::total_cmp);
    Ok(FittedRectifier::QuantileMap(QuantileMap { imputed, truth }))
}
