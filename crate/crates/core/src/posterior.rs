//! Posterior bootstrap under a Dirichlet-process prior centered at a
//! (rectified) AI base measure.
//!
//! Draw `b` reweights the inference rows and base atoms with
//! `Dirichlet(1,…,1, α/k,…,α/k)`, `α = γ·n`, and solves the weighted risk
//! minimization. All randomness of draw `b` comes from stream `b` of the run
//! seed, so a run is a pure function of its inputs regardless of threading.

use std::io::Write;

use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::losses::{predict_proba, solve_weighted, LossSpec, Theta, WeightedProblem};
use crate::measures::{
    realize_class_labels_with, sample_dirichlet_with, sample_flat_dirichlet, AtomicMeasure,
    DirichletWeights, LabeledSample, OutcomeKind,
};
use crate::rectifiers::{
    apply_rectifier, fit_rectifier, make_calibration_sample_with, CalibrationStrategy,
    FittedRectifier, RectifierSpec,
};
use crate::rng::SeededRng;

pub const POSTERIOR_FORMAT_TAG: &str = "#format rectiprior-posterior/1";

/// Largest tolerated fraction of failed draws.
pub const MAX_FAILED_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct PriorConfig {
    /// Prior strength `γ = α/n`; zero gives the Bayesian bootstrap.
    pub gamma: f64,
    pub draws: usize,
    /// Credibility `1 − β`.
    pub level: f64,
    pub strategy: CalibrationStrategy,
    pub rectifier: RectifierSpec,
    pub seed: u64,
    /// Worker count; `None` runs on the ambient rayon pool.
    pub threads: Option<usize>,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            draws: 500,
            level: 0.9,
            strategy: CalibrationStrategy::Npb,
            rectifier: RectifierSpec::Identity,
            seed: 0,
            threads: None,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::param(format!(
                "gamma must be finite and ≥ 0, got {}",
                self.gamma
            )));
        }
        if self.draws < 2 {
            return Err(Error::param(format!(
                "need at least 2 draws, got {}",
                self.draws
            )));
        }
        check_level(self.level)?;
        if self.threads == Some(0) {
            return Err(Error::param("thread count must be positive"));
        }
        self.strategy.validate()?;
        self.rectifier.validate()
    }

    /// True when the base measure takes part in the draws at all.
    fn uses_base(&self) -> bool {
        self.gamma > 0.0
    }

    /// True when draws refit the rectifier on their own calibration sample.
    fn refits(&self) -> bool {
        self.uses_base()
            && !self.rectifier.is_identity()
            && self.strategy != CalibrationStrategy::Fixed
    }
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param(format!(
            "credibility level {level} outside (0, 1)"
        )));
    }
    Ok(())
}

/// Everything a single draw produced, for inspection and testing.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawDetail {
    pub theta: Theta,
    pub weights: DirichletWeights,
    /// Rectifier used by this draw; `None` when the base measure was unused.
    pub rectifier: Option<FittedRectifier>,
    pub inference_rows: usize,
}

/// Outcome of one draw inside a run.
#[derive(Debug, Clone, PartialEq)]
pub enum DrawStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorRun {
    pub loss: LossSpec,
    pub config: PriorConfig,
    /// Successful draws ordered by draw index.
    pub samples: Vec<Theta>,
    /// Draw index of each entry of `samples`.
    pub sample_index: Vec<usize>,
    /// Status of every draw, indexed by draw index.
    pub status: Vec<DrawStatus>,
    /// Posterior mean.
    pub point: Vec<f64>,
    /// Per-coordinate central credible intervals at `config.level`.
    pub intervals: Vec<(f64, f64)>,
}

impl PosteriorRun {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn failed(&self) -> usize {
        self.status.iter().filter(|s| **s != DrawStatus::Ok).count()
    }

    /// Draws of coordinate `j`.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|t| t[j]).collect()
    }

    /// Sample standard deviation of coordinate `j` across draws.
    pub fn sd(&self, j: usize) -> f64 {
        let v = self.coordinate(j);
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    }
}

/// One posterior bootstrap draw using stream `draw_index` of `config.seed`.
pub fn posterior_draw(
    labeled: &LabeledSample,
    base: &AtomicMeasure,
    loss: &LossSpec,
    config: &PriorConfig,
    draw_index: u64,
) -> Result<Theta> {
    posterior_draw_detailed(labeled, base, loss, config, draw_index).map(|d| d.theta)
}

/// As [`posterior_draw`], also returning the weights and fitted rectifier.
pub fn posterior_draw_detailed(
    labeled: &LabeledSample,
    base: &AtomicMeasure,
    loss: &LossSpec,
    config: &PriorConfig,
    draw_index: u64,
) -> Result<DrawDetail> {
    config.validate()?;
    loss.validate()?;
    let fixed = prepare_fixed(labeled, base, config)?;
    draw(labeled, base, loss, config, fixed.as_ref(), draw_index).map_err(|e| Error::Draw {
        index: draw_index,
        source: Box::new(e),
    })
}

/// Rectifier fitted once for strategies that do not refit per draw.
struct Fixed {
    rectifier: FittedRectifier,
    rectified: AtomicMeasure,
}

fn prepare_fixed(
    labeled: &LabeledSample,
    base: &AtomicMeasure,
    config: &PriorConfig,
) -> Result<Option<Fixed>> {
    if !config.uses_base() || config.refits() {
        return Ok(None);
    }
    let rectifier = fit_rectifier(&config.rectifier, labeled, base)?;
    let rectified = apply_rectifier(&rectifier, base)?;
    Ok(Some(Fixed {
        rectifier,
        rectified,
    }))
}

fn draw(
    labeled: &LabeledSample,
    base: &AtomicMeasure,
    loss: &LossSpec,
    config: &PriorConfig,
    fixed: Option<&Fixed>,
    draw_index: u64,
) -> Result<DrawDetail> {
    let stream = SeededRng::new(config.seed, draw_index);
    let mut rng = stream.generator();

    if !config.uses_base() {
        let w = sample_flat_dirichlet(labeled.len(), &mut rng);
        let problem =
            WeightedProblem::new(loss).with_block(labeled.covariates(), labeled.outcomes(), &w)?;
        let theta = solve_weighted(&problem, stream)?;
        return Ok(DrawDetail {
            theta,
            weights: DirichletWeights {
                labeled: w,
                base: Vec::new(),
            },
            rectifier: None,
            inference_rows: labeled.len(),
        });
    }

    let (inference, rectifier, rectified) = match fixed {
        Some(f) => (None, f.rectifier.clone(), f.rectified.clone()),
        None => {
            let (calib, inference) =
                make_calibration_sample_with(labeled, config.strategy, &mut rng)?;
            let r = fit_rectifier(&config.rectifier, &calib, base)?;
            let rb = apply_rectifier(&r, base)?;
            (Some(inference), r, rb)
        }
    };
    let inference = inference.as_ref().unwrap_or(labeled);
    let rectified = if rectified.outcomes().kind() == OutcomeKind::ClassProbs {
        realize_class_labels_with(&rectified, &mut rng)?
    } else {
        rectified
    };
    let n = inference.len();
    let alpha = config.gamma * n as f64;
    let weights = sample_dirichlet_with(n, rectified.len(), alpha, &mut rng)?;
    let problem = WeightedProblem::new(loss)
        .with_block(
            inference.covariates(),
            inference.outcomes(),
            &weights.labeled,
        )?
        .with_block(rectified.covariates(), rectified.outcomes(), &weights.base)?;
    let theta = solve_weighted(&problem, stream)?;
    Ok(DrawDetail {
        theta,
        weights,
        rectifier: Some(rectifier),
        inference_rows: n,
    })
}

/// `B` posterior bootstrap draws, summarized by the posterior mean and
/// per-coordinate credible intervals over the successful draws.
pub fn run_posterior(
    labeled: &LabeledSample,
    base: &AtomicMeasure,
    loss: &LossSpec,
    config: &PriorConfig,
) -> Result<PosteriorRun> {
    config.validate()?;
    loss.validate()?;
    match config.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::param(format!("cannot start {t} workers: {e}")))?;
            pool.install(|| run_in_pool(labeled, base, loss, config))
        }
        None => run_in_pool(labeled, base, loss, config),
    }
}

fn run_in_pool(
    labeled: &LabeledSample,
    base: &AtomicMeasure,
    loss: &LossSpec,
    config: &PriorConfig,
) -> Result<PosteriorRun> {
    let fixed = prepare_fixed(labeled, base, config)?;
    let results: Vec<Result<Theta>> = (0..config.draws)
        .into_par_iter()
        .map(|b| draw(labeled, base, loss, config, fixed.as_ref(), b as u64).map(|d| d.theta))
        .collect();

    let mut samples = Vec::with_capacity(config.draws);
    let mut sample_index = Vec::with_capacity(config.draws);
    let mut status = Vec::with_capacity(config.draws);
    let mut first_failure = None;
    for (b, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => {
                samples.push(t);
                sample_index.push(b);
                status.push(DrawStatus::Ok);
            }
            Err(e) => {
                status.push(DrawStatus::Failed(e.to_string()));
                first_failure.get_or_insert(Error::Draw {
                    index: b as u64,
                    source: Box::new(e),
                });
            }
        }
    }
    let failed = config.draws - samples.len();
    if let Some(first) = first_failure {
        if failed as f64 > MAX_FAILED_FRACTION * config.draws as f64 || samples.len() < 2 {
            return Err(Error::TooManyFailures {
                failed,
                total: config.draws,
                first: Box::new(first),
            });
        }
    }

    let d = samples[0].len();
    let mut point = vec![0.0; d];
    for t in &samples {
        point.iter_mut().zip(t.iter()).for_each(|(p, v)| *p += v);
    }
    point.iter_mut().for_each(|p| *p /= samples.len() as f64);
    let intervals = (0..d)
        .map(|j| {
            let v: Vec<f64> = samples.iter().map(|t| t[j]).collect();
            credible_interval(&v, config.level)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorRun {
        loss: loss.clone(),
        config: config.clone(),
        samples,
        sample_index,
        status,
        point,
        intervals,
    })
}

/// Linearly interpolated empirical quantile of sorted data: position
/// `(B − 1)p` between order statistics.
pub fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    let frac = h - lo as f64;
    if frac == 0.0 {
        return sorted[lo];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Central interval between the `β/2` and `1 − β/2` empirical quantiles.
pub fn credible_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    check_level(level)?;
    if samples.len() < 2 {
        return Err(Error::param(format!(
            "credible interval needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("credible interval over non-finite samples"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let beta = 1.0 - level;
    Ok((
        interpolated_quantile(&s, beta / 2.0),
        interpolated_quantile(&s, 1.0 - beta / 2.0),
    ))
}

/// Argmax of the posterior-averaged class probabilities at `x`; ties go to the
/// smallest class index.
pub fn posterior_predict_class(run: &PosteriorRun, loss: &LossSpec, x: &[f64]) -> Result<usize> {
    let c = match loss {
        LossSpec::MultinomialLogistic { num_classes, .. } => *num_classes,
        LossSpec::Mlp(cfg) => cfg.num_classes,
        other => {
            return Err(Error::mismatch(format!(
                "class prediction needs a classification loss, got {}",
                other.name()
            )))
        }
    };
    if run.samples.is_empty() {
        return Err(Error::param("posterior run has no draws"));
    }
    let mut mean = vec![0.0; c];
    for t in &run.samples {
        let p = predict_proba(loss, t, x)?;
        mean.iter_mut().zip(p).for_each(|(m, v)| *m += v);
    }
    Ok(argmax(&mean))
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn loss_json(loss: &LossSpec) -> serde_json::Value {
    match loss {
        LossSpec::Mean => json!({"kind": "mean"}),
        LossSpec::Quantile { tau } => json!({"kind": "quantile", "tau": tau}),
        LossSpec::LinearRegression { intercept } => {
            json!({"kind": "linear-regression", "intercept": intercept})
        }
        LossSpec::MultinomialLogistic { num_classes, ridge } => {
            json!({"kind": "multinomial-logistic", "classes": num_classes, "ridge": ridge})
        }
        LossSpec::Mlp(c) => json!({
            "kind": "mlp", "hidden": c.hidden, "classes": c.num_classes, "epochs": c.epochs,
            "step": c.step, "adam_betas": [c.adam_betas.0, c.adam_betas.1], "seed": c.seed,
        }),
    }
}

fn strategy_json(s: &CalibrationStrategy) -> serde_json::Value {
    match s {
        CalibrationStrategy::Split { fraction } => json!({"kind": "split", "fraction": fraction}),
        other => json!({"kind": other.name()}),
    }
}

fn rectifier_json(r: &RectifierSpec) -> serde_json::Value {
    match r {
        RectifierSpec::ProbRecalib { ridge, clamp } => {
            json!({"kind": r.name(), "ridge": ridge, "clamp": clamp})
        }
        other => json!({"kind": other.name()}),
    }
}

/// Line-delimited record file: the format tag, a header echoing the
/// configuration, one record per draw, and a summary record.
pub fn write_posterior_records<W: Write>(run: &PosteriorRun, mut out: W) -> Result<()> {
    let c = &run.config;
    writeln!(out, "{POSTERIOR_FORMAT_TAG}")?;
    let header = json!({
        "record": "header",
        "loss": loss_json(&run.loss),
        "gamma": c.gamma,
        "draws": c.draws,
        "level": c.level,
        "strategy": strategy_json(&c.strategy),
        "rectifier": rectifier_json(&c.rectifier),
        "seed": c.seed,
        "threads": c.threads,
    });
    writeln!(out, "{header}")?;
    let mut next = run.sample_index.iter().zip(&run.samples).peekable();
    for (b, s) in run.status.iter().enumerate() {
        let rec = match s {
            DrawStatus::Ok => {
                let (_, theta) = next.next().expect("one sample per successful draw");
                json!({"record": "draw", "index": b, "status": "ok", "theta": theta.0})
            }
            DrawStatus::Failed(msg) => {
                json!({"record": "draw", "index": b, "status": "failed", "error": msg})
            }
        };
        writeln!(out, "{rec}")?;
    }
    let summary = json!({
        "record": "summary",
        "level": c.level,
        "point": run.point,
        "intervals": run.intervals.iter().map(|(l, u)| [*l, *u]).collect::<Vec<_>>(),
        "successful": run.samples.len(),
        "failed": run.failed(),
    });
    writeln!(out, "{summary}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{Covariates, Outcomes};

    fn real_base(y: Vec<f64>) -> AtomicMeasure {
        let n = y.len();
        AtomicMeasure::uniform(Covariates::empty(n), Outcomes::Real(y)).unwrap()
    }

    fn config(gamma: f64) -> PriorConfig {
        PriorConfig {
            gamma,
            draws: 50,
            seed: 11,
            ..PriorConfig::default()
        }
    }

    #[test]
    fn interval_of_one_to_hundred() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        let (l, u) = credible_interval(&s, 0.9).unwrap();
        assert!(
            (l - 5.95).abs() < 1e-12 && (u - 95.05).abs() < 1e-12,
            "{l} {u}"
        );
    }

    #[test]
    fn interval_edge_cases() {
        assert_eq!(credible_interval(&[2.5; 7], 0.9).unwrap(), (2.5, 2.5));
        assert!(credible_interval(&[1.0], 0.9).is_err());
        assert!(credible_interval(&[1.0, 2.0], 1.0).is_err());
        let (l, u) = credible_interval(&[-3.0, -1.0, 0.0, 1.0, 3.0], 0.9).unwrap();
        assert!((l + u).abs() < 1e-12);
    }

    #[test]
    fn single_pair_draw_is_closed_form() {
        let labeled = LabeledSample::from_outcomes(vec![1.0]).unwrap();
        let base = real_base(vec![5.0]);
        for b in 0..5 {
            let d =
                posterior_draw_detailed(&labeled, &base, &LossSpec::Mean, &config(2.0), b).unwrap();
            let w = d.weights.labeled[0];
            let expect = w * 1.0 + d.weights.base[0] * 5.0;
            assert!((d.theta[0] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_zero_ignores_base() {
        let labeled = LabeledSample::from_outcomes(vec![1.0, 2.0, 4.0]).unwrap();
        let base = real_base(vec![100.0]);
        let d = posterior_draw_detailed(&labeled, &base, &LossSpec::Mean, &config(0.0), 3).unwrap();
        assert!(d.weights.base.is_empty());
        let expect: f64 = d
            .weights
            .labeled
            .iter()
            .zip([1.0, 2.0, 4.0])
            .map(|(w, y)| w * y)
            .sum();
        assert!((d.theta[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn constant_data_gives_degenerate_run() {
        let labeled = LabeledSample::from_outcomes(vec![3.0; 20]).unwrap();
        let base = real_base(vec![3.0; 5]);
        let run = run_posterior(&labeled, &base, &LossSpec::Mean, &config(1.0)).unwrap();
        assert!(run.samples.iter().all(|t| (t[0] - 3.0).abs() < 1e-12));
        let (l, u) = run.intervals[0];
        assert!((l - 3.0).abs() < 1e-12 && (u - 3.0).abs() < 1e-12);
    }

    #[test]
    fn thread_count_does_not_change_the_run() {
        let labeled = LabeledSample::from_outcomes((0..40).map(|i| (i as f64).sin()).collect())
            .unwrap()
            .with_imputed(Outcomes::Real(
                (0..40).map(|i| (i as f64).sin() + 0.5).collect(),
            ))
            .unwrap();
        let base = real_base((0..60).map(|i| (i as f64).cos() + 0.5).collect());
        let mut cfg = config(1.0);
        cfg.rectifier = RectifierSpec::QuantileMap;
        cfg.threads = Some(1);
        let a = run_posterior(&labeled, &base, &LossSpec::Mean, &cfg).unwrap();
        cfg.threads = Some(4);
        let b = run_posterior(&labeled, &base, &LossSpec::Mean, &cfg).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn prediction_averages_probabilities() {
        let loss = LossSpec::MultinomialLogistic {
            num_classes: 2,
            ridge: 0.0,
        };
        // intercept-only models with softmax probabilities (0.6, 0.4) and (0.2, 0.8)
        let t1 = Theta(vec![0.6f64.ln(), 0.4f64.ln()]);
        let t2 = Theta(vec![0.2f64.ln(), 0.8f64.ln()]);
        let mut run = PosteriorRun {
            loss: loss.clone(),
            config: config(1.0),
            samples: vec![t1],
            sample_index: vec![0],
            status: vec![DrawStatus::Ok],
            point: vec![0.0, 0.0],
            intervals: vec![],
        };
        assert_eq!(posterior_predict_class(&run, &loss, &[]).unwrap(), 0);
        run.samples.push(t2);
        assert_eq!(posterior_predict_class(&run, &loss, &[]).unwrap(), 1);
        assert!(posterior_predict_class(&run, &LossSpec::Mean, &[]).is_err());
    }

    #[test]
    fn record_file_layout() {
        let labeled = LabeledSample::from_outcomes(vec![1.0, 2.0]).unwrap();
        let base = real_base(vec![1.5]);
        let run = run_posterior(&labeled, &base, &LossSpec::Mean, &config(1.0)).unwrap();
        let mut buf = Vec::new();
        write_posterior_records(&run, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], POSTERIOR_FORMAT_TAG);
        assert_eq!(lines.len(), 1 + 1 + 50 + 1);
        let last: serde_json::Value = serde_json::from_str(lines[lines.len() - 1]).unwrap();
        assert_eq!(last["record"], "summary");
    }
}
