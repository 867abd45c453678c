//! Post-hoc recalibration of imputed class probabilities:
//! `g(p̂, x) = softmax(W (log p̂, x) + b)`.

use crate::error::{Error, Result};
use crate::losses::{softmax_in_place, solve_weighted, LossSpec, WeightedProblem};
use crate::measures::{AtomicMeasure, Covariates, LabeledSample, OutcomeKind, Outcomes};
use crate::rng::SeededRng;

use super::{FittedRectifier, RectifierSpec};

pub const RECALIB_MAX_CLAMP: f64 = 1e-2;

/// Fitted recalibration map. `weights` is `C × (C + d_x)` row-major and acts on
/// the feature vector `(log p̂, x)`; probabilities are floored at `clamp` and
/// renormalized before the logarithm.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbRecalib {
    pub num_classes: usize,
    pub d_x: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub clamp: f64,
}

impl ProbRecalib {
    /// `W = [I | 0]`, `b = 0`: returns `p̂` unchanged (up to clamping).
    pub fn identity(num_classes: usize, d_x: usize, clamp: f64) -> Self {
        let f = num_classes + d_x;
        let mut weights = vec![0.0; num_classes * f];
        for c in 0..num_classes {
            weights[c * f + c] = 1.0;
        }
        Self {
            num_classes,
            d_x,
            weights,
            bias: vec![0.0; num_classes],
            clamp,
        }
    }

    fn features_into(&self, p: &[f64], x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let s: f64 = p.iter().map(|v| v.max(self.clamp)).sum();
        out.extend(p.iter().map(|v| (v.max(self.clamp) / s).ln()));
        out.extend_from_slice(x);
    }

    pub fn map(&self, p: &[f64], x: &[f64]) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.num_classes + self.d_x);
        self.features_into(p, x, &mut f);
        let width = f.len();
        let mut out: Vec<f64> = (0..self.num_classes)
            .map(|c| {
                let row = &self.weights[c * width..(c + 1) * width];
                self.bias[c] + row.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        softmax_in_place(&mut out);
        out
    }

    pub(super) fn apply(&self, base: &AtomicMeasure) -> Result<AtomicMeasure> {
        let Outcomes::ClassProbs { probs, num_classes } = base.outcomes() else {
            return Err(Error::mismatch("recalibration needs probability outcomes"));
        };
        if *num_classes != self.num_classes || base.covariates().cols() != self.d_x {
            return Err(Error::mismatch(
                "recalibration map fitted for a different shape",
            ));
        }
        let c = *num_classes;
        let mut out = Vec::with_capacity(probs.len());
        for (i, p) in probs.chunks(c).enumerate() {
            out.extend(self.map(p, base.covariates().row(i)));
        }
        base.with_outcomes(Outcomes::ClassProbs {
            probs: out,
            num_classes: c,
        })
    }
}

/// Multinomial logistic regression of the calibration labels on
/// `(log p̂, x)` with the given ridge penalty.
pub fn fit_prob_recalib(calib: &LabeledSample, spec: &RectifierSpec) -> Result<FittedRectifier> {
    let RectifierSpec::ProbRecalib { ridge, clamp } = *spec else {
        return Err(Error::mismatch("expected a probability recalibration spec"));
    };
    spec.validate()?;
    let Outcomes::Class { num_classes, .. } = calib.outcomes() else {
        return Err(Error::mismatch("recalibration needs class-label outcomes"));
    };
    let c = *num_classes;
    let imputed = calib
        .imputed()
        .ok_or_else(|| Error::mismatch("calibration sample carries no imputed probabilities"))?;
    if imputed.kind() != OutcomeKind::ClassProbs || imputed.num_classes() != Some(c) {
        return Err(Error::mismatch(format!(
            "recalibration needs {c}-class probability imputations"
        )));
    }
    let d_x = calib.covariates().cols();
    let shape = ProbRecalib::identity(c, d_x, clamp);
    let width = c + d_x;
    let mut feats = Vec::with_capacity(calib.len() * width);
    let mut row = Vec::with_capacity(width);
    for i in 0..calib.len() {
        let crate::measures::OutcomeRef::Probs(p) = imputed.view(i) else {
            unreachable!()
        };
        shape.features_into(p, calib.covariates().row(i), &mut row);
        feats.extend_from_slice(&row);
    }
    let design = Covariates::new(calib.len(), width, feats)?;
    let loss = LossSpec::MultinomialLogistic {
        num_classes: c,
        ridge,
    };
    let w = vec![1.0; calib.len()];
    let problem = WeightedProblem::new(&loss).with_block(&design, calib.outcomes(), &w)?;
    let theta = solve_weighted(&problem, SeededRng::new(0, 0))?;
    let stride = width + 1;
    let mut weights = Vec::with_capacity(c * width);
    let mut bias = Vec::with_capacity(c);
    for k in 0..c {
        bias.push(theta[k * stride]);
        weights.extend_from_slice(&theta[k * stride + 1..(k + 1) * stride]);
    }
    Ok(FittedRectifier::ProbRecalib(ProbRecalib {
        num_classes: c,
        d_x,
        weights,
        bias,
        clamp,
    }))
}
