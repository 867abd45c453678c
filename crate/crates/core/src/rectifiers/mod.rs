//! Rectifiers: data-dependent maps that transform the outcomes of an AI base
//! measure so its estimating equations agree with those of the labeled data.
//!
//! A rectifier is fitted on a calibration sample (labeled rows that also carry
//! the AI imputation) and then applied atom-wise to the base measure. Covariates
//! and atom weights are never changed.

mod format;
mod isotonic;
mod moments;
mod quantile_map;
mod recalib;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::losses::{score, Atom, LossSpec};
use crate::measures::{bootstrap_indices, AtomicMeasure, LabeledSample, OutcomeRef, Outcomes};
use crate::rng::SeededRng;

pub use format::{parse_rectifier, write_rectifier, RECTIFIER_FORMAT_TAG};
pub use isotonic::{fit_isotonic, pava, IsotonicMap};
pub use moments::{fit_moment_affine, fit_moment_shift, moment_system};
pub use quantile_map::{fit_quantile_map, QuantileMap};
pub use recalib::{fit_prob_recalib, ProbRecalib, RECALIB_MAX_CLAMP};

/// Rectifier family.
#[derive(Debug, Clone, PartialEq)]
pub enum RectifierSpec {
    Identity,
    QuantileMap,
    Isotonic,
    MomentShift,
    MomentAffine,
    ProbRecalib { ridge: f64, clamp: f64 },
}

impl RectifierSpec {
    pub fn validate(&self) -> Result<()> {
        if let RectifierSpec::ProbRecalib { ridge, clamp } = self {
            if !(*ridge >= 0.0) || !ridge.is_finite() {
                return Err(Error::param(format!(
                    "recalibration ridge must be ≥ 0, got {ridge}"
                )));
            }
            if !(*clamp > 0.0 && *clamp <= RECALIB_MAX_CLAMP) {
                return Err(Error::param(format!(
                    "probability clamp must lie in (0, {RECALIB_MAX_CLAMP}], got {clamp}"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            RectifierSpec::Identity => "identity",
            RectifierSpec::QuantileMap => "quantile-map",
            RectifierSpec::Isotonic => "isotonic",
            RectifierSpec::MomentShift => "moment-shift",
            RectifierSpec::MomentAffine => "moment-affine",
            RectifierSpec::ProbRecalib { .. } => "prob-recalib",
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, RectifierSpec::Identity)
    }
}

/// A fitted map `T_η̂`.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedRectifier {
    Identity,
    QuantileMap(QuantileMap),
    Isotonic(IsotonicMap),
    MomentShift {
        shift: f64,
    },
    /// `ŷ ↦ intercept + slope·ŷ`. `fallback` marks a rank-deficient moment
    /// system that was resolved with the pure shift.
    MomentAffine {
        intercept: f64,
        slope: f64,
        fallback: bool,
    },
    ProbRecalib(ProbRecalib),
}

impl FittedRectifier {
    pub fn kind(&self) -> &'static str {
        match self {
            FittedRectifier::Identity => "identity",
            FittedRectifier::QuantileMap(_) => "quantile-map",
            FittedRectifier::Isotonic(_) => "isotonic",
            FittedRectifier::MomentShift { .. } => "moment-shift",
            FittedRectifier::MomentAffine { .. } => "moment-affine",
            FittedRectifier::ProbRecalib(_) => "prob-recalib",
        }
    }

    /// Map a single real imputed outcome.
    pub fn map_real(&self, y: f64) -> Result<f64> {
        match self {
            FittedRectifier::Identity => Ok(y),
            FittedRectifier::QuantileMap(q) => Ok(q.apply(y)),
            FittedRectifier::Isotonic(m) => Ok(m.apply(y)),
            FittedRectifier::MomentShift { shift } => Ok(y + shift),
            FittedRectifier::MomentAffine {
                intercept, slope, ..
            } => Ok(intercept + slope * y),
            FittedRectifier::ProbRecalib(_) => Err(Error::mismatch(
                "probability recalibration cannot map real outcomes",
            )),
        }
    }
}

/// How the calibration sample is built from the labeled data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationStrategy {
    /// Calibrate on the full labeled sample.
    Fixed,
    /// Random partition: `⌈f·n⌉` rows calibrate, the rest are used for inference.
    Split { fraction: f64 },
    /// Calibrate on a nonparametric bootstrap resample of the labeled sample.
    Npb,
}

impl CalibrationStrategy {
    pub fn validate(&self) -> Result<()> {
        match self {
            CalibrationStrategy::Split { fraction } if !(*fraction > 0.0 && *fraction < 1.0) => {
                Err(Error::param(format!(
                    "split fraction {fraction} outside (0, 1)"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CalibrationStrategy::Fixed => "fixed",
            CalibrationStrategy::Split { .. } => "split",
            CalibrationStrategy::Npb => "npb",
        }
    }
}

/// Returns `(calibration, inference)` samples.
pub fn make_calibration_sample(
    labeled: &LabeledSample,
    strategy: CalibrationStrategy,
    rng: SeededRng,
) -> Result<(LabeledSample, LabeledSample)> {
    make_calibration_sample_with(labeled, strategy, &mut rng.generator())
}

pub(crate) fn make_calibration_sample_with<R: rand::Rng + ?Sized>(
    labeled: &LabeledSample,
    strategy: CalibrationStrategy,
    rng: &mut R,
) -> Result<(LabeledSample, LabeledSample)> {
    strategy.validate()?;
    let n = labeled.len();
    if n == 0 {
        return Err(Error::param("labeled sample is empty"));
    }
    match strategy {
        CalibrationStrategy::Fixed => Ok((labeled.clone(), labeled.clone())),
        CalibrationStrategy::Npb => {
            let idx = bootstrap_indices(n, rng);
            Ok((labeled.select(&idx), labeled.clone()))
        }
        CalibrationStrategy::Split { fraction } => {
            let m = split_size(n, fraction);
            if m == 0 || m >= n {
                return Err(Error::param(format!(
                    "split fraction {fraction} of {n} rows leaves an empty part"
                )));
            }
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(rng);
            let (cal, inf) = idx.split_at(m);
            let mut cal = cal.to_vec();
            let mut inf = inf.to_vec();
            cal.sort_unstable();
            inf.sort_unstable();
            Ok((labeled.select(&cal), labeled.select(&inf)))
        }
    }
}

/// `⌈f·n⌉`, robust to `f·n` landing a rounding error above an integer.
pub(crate) fn split_size(n: usize, fraction: f64) -> usize {
    let raw = fraction * n as f64;
    let r = raw.round();
    if (raw - r).abs() <= 1e-9 * n as f64 {
        r as usize
    } else {
        raw.ceil() as usize
    }
}

fn real_imputed(calib: &LabeledSample) -> Result<&[f64]> {
    calib
        .imputed()
        .ok_or_else(|| Error::mismatch("calibration sample carries no imputed outcomes"))?
        .as_real()
}

/// Fit the configured rectifier on a calibration sample for the given base.
pub fn fit_rectifier(
    spec: &RectifierSpec,
    calib: &LabeledSample,
    base: &AtomicMeasure,
) -> Result<FittedRectifier> {
    spec.validate()?;
    match spec {
        RectifierSpec::Identity => Ok(FittedRectifier::Identity),
        RectifierSpec::QuantileMap => {
            let truth = calib.outcomes().as_real()?;
            let imputed = real_imputed(calib)?;
            fit_quantile_map(truth, imputed)
        }
        RectifierSpec::Isotonic => {
            let truth = calib.outcomes().as_real()?;
            let imputed = real_imputed(calib)?;
            fit_isotonic(imputed, truth)
        }
        RectifierSpec::MomentShift => fit_moment_shift(calib, base),
        RectifierSpec::MomentAffine => fit_moment_affine(calib, base),
        RectifierSpec::ProbRecalib { .. } => fit_prob_recalib(calib, spec),
    }
}

/// `T_η̂(P_base)`: transform every atom's outcome, keeping covariates and weights.
pub fn apply_rectifier(r: &FittedRectifier, base: &AtomicMeasure) -> Result<AtomicMeasure> {
    match (r, base.outcomes()) {
        (FittedRectifier::Identity, _) => Ok(base.clone()),
        (FittedRectifier::ProbRecalib(p), Outcomes::ClassProbs { .. }) => p.apply(base),
        (FittedRectifier::ProbRecalib(_), other) => Err(Error::mismatch(format!(
            "probability recalibration applies to probability outcomes, found {}",
            other.kind()
        ))),
        (real_map, Outcomes::Real(y)) => {
            let mapped = y
                .iter()
                .map(|&v| real_map.map_real(v))
                .collect::<Result<Vec<_>>>()?;
            base.with_outcomes(Outcomes::Real(mapped))
        }
        (r, other) => Err(Error::mismatch(format!(
            "{} rectifier applies to real outcomes, found {}",
            r.kind(),
            other.kind()
        ))),
    }
}

/// Weighted mean score `P g_θ` under a measure. Probability outcomes contribute
/// the expected score under their class distribution.
pub fn mean_score(measure: &AtomicMeasure, loss: &LossSpec, theta: &[f64]) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; theta.len()];
    let x = measure.covariates();
    let y = measure.outcomes();
    for (i, &w) in measure.weights().iter().enumerate() {
        match y.view(i) {
            OutcomeRef::Probs(p) => {
                for (c, pc) in p.iter().enumerate() {
                    if *pc == 0.0 {
                        continue;
                    }
                    let g = score(loss, theta, Atom::new(x.row(i), OutcomeRef::Class(c)))?;
                    acc.iter_mut().zip(g).for_each(|(a, g)| *a += w * pc * g);
                }
            }
            view => {
                let g = score(loss, theta, Atom::new(x.row(i), view))?;
                acc.iter_mut().zip(g).for_each(|(a, g)| *a += w * g);
            }
        }
    }
    Ok(acc)
}

/// `(P_reference − P_base) g_θ`.
pub fn score_discrepancy(
    base: &AtomicMeasure,
    reference: &AtomicMeasure,
    loss: &LossSpec,
    theta: &[f64],
) -> Result<Vec<f64>> {
    let b = mean_score(base, loss, theta)?;
    let r = mean_score(reference, loss, theta)?;
    Ok(r.iter().zip(&b).map(|(r, b)| r - b).collect())
}
