//! Synthetic data-generating laws with analytically known estimands.
//!
//! Every generator draws a labeled sample (covariates, true outcome and the AI
//! imputation for the same row) and an independent unlabeled base sample that
//! carries only covariates and imputations.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::losses::{softmax_in_place, LossSpec};
use crate::measures::{AtomicMeasure, Covariates, LabeledSample, Outcomes};
use crate::rng::SeededRng;

/// Coefficients `(intercept, slope)` of the heteroscedastic linear law.
pub const HETERO_THETA: [f64; 2] = [2.0, -1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// `y ~ N(0, 1)` through `x`; `ŷ = y + shift + noise·ε`.
    GaussianShift,
    /// `y` as above; `ŷ = shift + sinh(distortion·y)/distortion + noise·ε`.
    MonotoneDistortion,
    /// `y = 2 − x + (0.5 + |x|)·noise·ε`; `ŷ = 2 − x + shift + distortion·x`.
    HeteroscedasticLinear,
    /// True logits `Bx + noise·u` with `u` seen only by the AI;
    /// `p̂ = softmax(distortion·(logits + shift·e_0))`.
    CategoricalMiscalibrated,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::GaussianShift => "gaussian-shift",
            ScenarioKind::MonotoneDistortion => "monotone-distortion",
            ScenarioKind::HeteroscedasticLinear => "heteroscedastic-linear",
            ScenarioKind::CategoricalMiscalibrated => "categorical-miscalibrated",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "gaussian-shift" => ScenarioKind::GaussianShift,
            "monotone-distortion" => ScenarioKind::MonotoneDistortion,
            "heteroscedastic-linear" => ScenarioKind::HeteroscedasticLinear,
            "categorical-miscalibrated" => ScenarioKind::CategoricalMiscalibrated,
            other => return Err(Error::param(format!("unknown scenario `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Labeled rows.
    pub n: usize,
    /// Base (unlabeled) rows.
    pub n_unlabeled: usize,
    /// Held-out labeled rows for predictive evaluation (classification).
    pub n_test: usize,
    pub noise: f64,
    pub shift: f64,
    pub distortion: f64,
    pub num_classes: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind) -> Self {
        let (noise, shift, distortion) = match kind {
            ScenarioKind::GaussianShift => (0.5, 1.0, 1.0),
            ScenarioKind::MonotoneDistortion => (0.0, 0.3, 1.0),
            ScenarioKind::HeteroscedasticLinear => (1.0, 0.5, 0.5),
            ScenarioKind::CategoricalMiscalibrated => (1.0, 1.5, 2.0),
        };
        Self {
            kind,
            n: 500,
            n_unlabeled: 2000,
            n_test: if kind == ScenarioKind::CategoricalMiscalibrated {
                1000
            } else {
                0
            },
            noise,
            shift,
            distortion,
            num_classes: 3,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n_unlabeled == 0 {
            return Err(Error::param("scenario sizes must be at least 1"));
        }
        for (name, v) in [
            ("noise", self.noise),
            ("shift", self.shift),
            ("distortion", self.distortion),
        ] {
            if !v.is_finite() {
                return Err(Error::param(format!("scenario {name} must be finite")));
            }
        }
        if self.noise < 0.0 {
            return Err(Error::param("scenario noise must be ≥ 0"));
        }
        if self.kind == ScenarioKind::MonotoneDistortion && self.distortion == 0.0 {
            return Err(Error::param("monotone distortion needs a nonzero rate"));
        }
        if self.kind == ScenarioKind::CategoricalMiscalibrated && self.num_classes < 2 {
            return Err(Error::param(
                "categorical scenario needs at least 2 classes",
            ));
        }
        Ok(())
    }

    /// Covariate dimension of the generated data.
    pub fn d_x(&self) -> usize {
        match self.kind {
            ScenarioKind::CategoricalMiscalibrated => 2,
            _ => 1,
        }
    }

    /// Population value `θ0` of `loss` under the generating law.
    pub fn truth(&self, loss: &LossSpec) -> Result<Vec<f64>> {
        let unavailable = || {
            Error::Capability(format!(
                "no analytic {} estimand for the {} scenario",
                loss.name(),
                self.kind.name()
            ))
        };
        match self.kind {
            ScenarioKind::GaussianShift | ScenarioKind::MonotoneDistortion => match loss {
                LossSpec::Mean => Ok(vec![0.0]),
                LossSpec::Quantile { tau } => Ok(vec![Normal::standard().inverse_cdf(*tau)]),
                LossSpec::LinearRegression { intercept: true } => Ok(vec![0.0, FRAC_1_SQRT_2]),
                LossSpec::LinearRegression { intercept: false } => Ok(vec![FRAC_1_SQRT_2]),
                _ => Err(unavailable()),
            },
            ScenarioKind::HeteroscedasticLinear => match loss {
                LossSpec::Mean => Ok(vec![HETERO_THETA[0]]),
                LossSpec::LinearRegression { intercept: true } => Ok(HETERO_THETA.to_vec()),
                _ => Err(unavailable()),
            },
            ScenarioKind::CategoricalMiscalibrated => Err(unavailable()),
        }
    }
}

/// Generated data. `labeled` carries the imputation of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub labeled: LabeledSample,
    pub base: AtomicMeasure,
    pub test: Option<LabeledSample>,
}

struct Rows {
    x: Vec<f64>,
    y: Vec<f64>,
    labels: Vec<usize>,
    imputed: Vec<f64>,
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn draw_rows<R: Rng + ?Sized>(spec: &ScenarioSpec, count: usize, rng: &mut R) -> Rows {
    let mut rows = Rows {
        x: Vec::new(),
        y: Vec::new(),
        labels: Vec::new(),
        imputed: Vec::new(),
    };
    let c = spec.num_classes;
    let mut logits = vec![0.0; c];
    for _ in 0..count {
        match spec.kind {
            ScenarioKind::GaussianShift | ScenarioKind::MonotoneDistortion => {
                let x = normal(rng);
                let y = FRAC_1_SQRT_2 * (x + normal(rng));
                let e = normal(rng);
                let yhat = if spec.kind == ScenarioKind::GaussianShift {
                    y + spec.shift + spec.noise * e
                } else {
                    spec.shift + (spec.distortion * y).sinh() / spec.distortion + spec.noise * e
                };
                rows.x.push(x);
                rows.y.push(y);
                rows.imputed.push(yhat);
            }
            ScenarioKind::HeteroscedasticLinear => {
                let x = normal(rng);
                let mean = HETERO_THETA[0] + HETERO_THETA[1] * x;
                rows.x.push(x);
                rows.y
                    .push(mean + (0.5 + x.abs()) * spec.noise * normal(rng));
                rows.imputed.push(mean + spec.shift + spec.distortion * x);
            }
            ScenarioKind::CategoricalMiscalibrated => {
                let x = [normal(rng), normal(rng)];
                for (k, l) in logits.iter_mut().enumerate() {
                    let a = 2.0 * PI * k as f64 / c as f64;
                    *l = 1.5 * (a.cos() * x[0] + a.sin() * x[1]) + spec.noise * normal(rng);
                }
                let mut p = logits.clone();
                softmax_in_place(&mut p);
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut label = c - 1;
                for (k, pk) in p.iter().enumerate() {
                    acc += pk;
                    if u < acc {
                        label = k;
                        break;
                    }
                }
                let mut q: Vec<f64> = logits
                    .iter()
                    .enumerate()
                    .map(|(k, l)| spec.distortion * (l + if k == 0 { spec.shift } else { 0.0 }))
                    .collect();
                softmax_in_place(&mut q);
                rows.x.extend(x);
                rows.labels.push(label);
                rows.imputed.extend(q);
            }
        }
    }
    rows
}

impl Rows {
    fn outcomes(&self, spec: &ScenarioSpec) -> Outcomes {
        match spec.kind {
            ScenarioKind::CategoricalMiscalibrated => Outcomes::Class {
                labels: self.labels.clone(),
                num_classes: spec.num_classes,
            },
            _ => Outcomes::Real(self.y.clone()),
        }
    }

    fn imputations(&self, spec: &ScenarioSpec) -> Outcomes {
        match spec.kind {
            ScenarioKind::CategoricalMiscalibrated => Outcomes::ClassProbs {
                probs: self.imputed.clone(),
                num_classes: spec.num_classes,
            },
            _ => Outcomes::Real(self.imputed.clone()),
        }
    }
}

/// Draw labeled, base and (optionally) test data. Streams 0, 1, 2 of the spec
/// seed feed the three parts, so changing one size leaves the others intact.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let d = spec.d_x();
    let part = |stream: u64, count: usize| {
        draw_rows(
            spec,
            count,
            &mut SeededRng::new(spec.seed, stream).generator(),
        )
    };

    let lab = part(0, spec.n);
    let labeled = LabeledSample::new(
        Covariates::new(spec.n, d, lab.x.clone())?,
        lab.outcomes(spec),
    )?
    .with_imputed(lab.imputations(spec))?;

    let unl = part(1, spec.n_unlabeled);
    let base = AtomicMeasure::uniform(
        Covariates::new(spec.n_unlabeled, d, unl.x.clone())?,
        unl.imputations(spec),
    )?;

    let test = if spec.n_test > 0 {
        let t = part(2, spec.n_test);
        Some(
            LabeledSample::new(
                Covariates::new(spec.n_test, d, t.x.clone())?,
                t.outcomes(spec),
            )?
            .with_imputed(t.imputations(spec))?,
        )
    } else {
        None
    };
    Ok(Scenario {
        spec: spec.clone(),
        labeled,
        base,
        test,
    })
}
