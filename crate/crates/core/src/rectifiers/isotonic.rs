use crate::error::{Error, Result};

use super::FittedRectifier;

/// Least-squares weighted isotonic fit of `values` (already ordered by the
/// regressor) with the pool-adjacent-violators algorithm.
///
/// Returns one fitted value per input. Block values are recomputed from the
/// raw data in index order once the partition is final.
pub fn pava(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // (start, end, weight, weighted sum)
    let mut blocks: Vec<(usize, usize, f64, f64)> = Vec::with_capacity(values.len());
    for (i, (&y, &w)) in values.iter().zip(weights).enumerate() {
        blocks.push((i, i + 1, w, w * y));
        while blocks.len() > 1 {
            let (s1, _, w1, sum1) = blocks[blocks.len() - 2];
            let (_, e2, w2, sum2) = blocks[blocks.len() - 1];
            if sum1 / w1 > sum2 / w2 {
                blocks.pop();
                let last = blocks.last_mut().expect("two blocks");
                *last = (s1, e2, w1 + w2, sum1 + sum2);
            } else {
                break;
            }
        }
    }
    let mut out = vec![0.0; values.len()];
    for (s, e, _, _) in blocks {
        let v = block_mean(&values[s..e], &weights[s..e]);
        out[s..e].iter_mut().for_each(|o| *o = v);
    }
    out
}

pub(crate) fn block_mean(values: &[f64], weights: &[f64]) -> f64 {
    let mut sw = 0.0;
    let mut swy = 0.0;
    for (y, w) in values.iter().zip(weights) {
        sw += w;
        swy += w * y;
    }
    swy / sw
}

/// Monotone step map fitted by isotonic regression of true on imputed outcomes.
///
/// `knots` are the distinct sorted imputed values and `values` the fitted level
/// at each. Between knots the map is piecewise constant with jumps at the
/// midpoints of consecutive knots (a midpoint itself takes the left level);
/// outside the knot range it is clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicMap {
    knots: Vec<f64>,
    values: Vec<f64>,
    breakpoints: Vec<f64>,
}

impl IsotonicMap {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::param(
                "isotonic map needs equal-length nonempty knots and values",
            ));
        }
        if !knots.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::param("isotonic knots must be strictly increasing"));
        }
        if !values.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::param("isotonic values must be nondecreasing"));
        }
        let breakpoints = knots.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self {
            knots,
            values,
            breakpoints,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    #[inline]
    pub fn apply(&self, y: f64) -> f64 {
        self.values[self.breakpoints.partition_point(|&b| b < y)]
    }
}

/// Isotonic regression of `calib_true` on `calib_imputed`. Tied imputed values
/// are pooled first so the fit is a function of the imputed value.
pub fn fit_isotonic(calib_imputed: &[f64], calib_true: &[f64]) -> Result<FittedRectifier> {
    if calib_imputed.len() != calib_true.len() {
        return Err(Error::param(format!(
            "{} imputations but {} true outcomes",
            calib_imputed.len(),
            calib_true.len()
        )));
    }
    if calib_true.is_empty() {
        return Err(Error::param(
            "isotonic fit needs at least one calibration pair",
        ));
    }
    let mut order: Vec<usize> = (0..calib_true.len()).collect();
    order.sort_by(|&a, &b| calib_imputed[a].total_cmp(&calib_imputed[b]));
    let mut knots = Vec::new();
    let mut means = Vec::new();
    let mut counts = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let x = calib_imputed[order[i]];
        let mut j = i;
        let mut sum = 0.0;
        while j < order.len() && calib_imputed[order[j]] == x {
            sum += calib_true[order[j]];
            j += 1;
        }
        knots.push(x);
        means.push(sum / (j - i) as f64);
        counts.push((j - i) as f64);
        i = j;
    }
    let values = pava(&means, &counts);
    Ok(FittedRectifier::Isotonic(IsotonicMap::new(knots, values)?))
}
