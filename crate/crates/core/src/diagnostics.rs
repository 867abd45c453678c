//! Interval scoring, coverage aggregation, the sandwich covariance of the
//! posterior limit, the centering-bias predictor, and classical baselines.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::losses::{hessian, score, solve_weighted, Atom, LossSpec, WeightedProblem};
use crate::measures::{empirical_measure, AtomicMeasure, LabeledSample, OutcomeRef};
use crate::rectifiers::score_discrepancy;
use crate::rng::SeededRng;

pub const BENCH_FORMAT_TAG: &str = "#format rectiprior-bench/1";
pub const SUMMARY_FORMAT_TAG: &str = "#format rectiprior-bench-summary/1";

/// Column order of the bench table.
pub const BENCH_COLUMNS: [&str; 9] = [
    "replication",
    "method",
    "lower",
    "upper",
    "point",
    "truth",
    "covered",
    "interval_score",
    "width",
];

/// `(U − L) + (2/β)(L − θ0)·1{θ0 < L} + (2/β)(θ0 − U)·1{θ0 > U}`.
pub fn interval_score(lower: f64, upper: f64, theta0: f64, beta: f64) -> Result<f64> {
    if !(lower <= upper) {
        return Err(Error::param(format!(
            "interval lower {lower} exceeds upper {upper}"
        )));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param(format!("beta {beta} outside (0, 1)")));
    }
    let mut s = upper - lower;
    if theta0 < lower {
        s += 2.0 / beta * (lower - theta0);
    }
    if theta0 > upper {
        s += 2.0 / beta * (theta0 - upper);
    }
    Ok(s)
}

/// Plug-in matrices of the posterior limit and its covariance
/// `J⁻¹ I J⁻¹ / (n(1 + γ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichEstimate {
    pub j: DMatrix<f64>,
    pub i: DMatrix<f64>,
    pub cov: DMatrix<f64>,
    pub gamma: f64,
    pub n: usize,
}

impl SandwichEstimate {
    /// Standard deviations `√cov_jj`.
    pub fn sd(&self) -> Vec<f64> {
        self.cov
            .diagonal()
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect()
    }
}

/// Calls `f(outcome, mass)` for an atom, expanding a probability vector into its
/// classes.
fn for_each_outcome(
    y: OutcomeRef<'_>,
    mut f: impl FnMut(OutcomeRef<'_>, f64) -> Result<()>,
) -> Result<()> {
    match y {
        OutcomeRef::Probs(p) => {
            for (c, &pc) in p.iter().enumerate() {
                if pc > 0.0 {
                    f(OutcomeRef::Class(c), pc)?;
                }
            }
            Ok(())
        }
        other => f(other, 1.0),
    }
}

/// `(P hessian, P g gᵀ)` at `theta` under a measure.
fn plug_in(
    measure: &AtomicMeasure,
    loss: &LossSpec,
    theta: &[f64],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let d = theta.len();
    let mut j = DMatrix::zeros(d, d);
    let mut i = DMatrix::zeros(d, d);
    let x = measure.covariates();
    for (r, &w) in measure.weights().iter().enumerate() {
        for_each_outcome(measure.outcomes().view(r), |y, mass| {
            let atom = Atom::new(x.row(r), y);
            let h = hessian(loss, theta, atom)?;
            let g = DVector::from_vec(score(loss, theta, atom)?);
            j += h * (w * mass);
            i += (&g * g.transpose()) * (w * mass);
            Ok(())
        })?;
    }
    Ok((j, i))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::param(format!(
            "gamma must be finite and ≥ 0, got {gamma}"
        )));
    }
    Ok(())
}

fn require_hessian(loss: &LossSpec) -> Result<()> {
    if !loss.has_hessian() {
        return Err(Error::Capability(format!(
            "{} loss has no analytic Hessian for the sandwich",
            loss.name()
        )));
    }
    Ok(())
}

/// Mixed plug-ins `J = (P_n ġ + γ P_base ġ)/(1 + γ)` and
/// `I = (P_n g gᵀ + γ P_base g gᵀ)/(1 + γ)` at `theta_hat`.
pub fn sandwich(
    labeled: &LabeledSample,
    base: &AtomicMeasure,
    loss: &LossSpec,
    theta_hat: &[f64],
    gamma: f64,
) -> Result<SandwichEstimate> {
    check_gamma(gamma)?;
    require_hessian(loss)?;
    let pn = empirical_measure(labeled)?;
    let (mut j, mut i) = plug_in(&pn, loss, theta_hat)?;
    if gamma > 0.0 {
        let (jb, ib) = plug_in(base, loss, theta_hat)?;
        j = (j + jb * gamma) / (1.0 + gamma);
        i = (i + ib * gamma) / (1.0 + gamma);
    }
    let n = labeled.len();
    let jinv = linalg::inverse(&j, "sandwich J")?;
    let mut cov = &jinv * &i * &jinv / (n as f64 * (1.0 + gamma));
    cov = (&cov + cov.transpose()) * 0.5;
    Ok(SandwichEstimate {
        j,
        i,
        cov,
        gamma,
        n,
    })
}

/// Leading posterior-center displacement
/// `(γ/(1 + γ)) Ĵ0⁻¹ (P_n − P_base) g_θ̃`, with `Ĵ0` the labeled plug-in Hessian.
pub fn predict_centering_bias(
    labeled: &LabeledSample,
    rectified_base: &AtomicMeasure,
    loss: &LossSpec,
    theta_tilde: &[f64],
    gamma: f64,
) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    require_hessian(loss)?;
    let pn = empirical_measure(labeled)?;
    let (j0, _) = plug_in(&pn, loss, theta_tilde)?;
    let j0inv = linalg::inverse(&j0, "labeled Hessian")?;
    let disc = score_discrepancy(rectified_base, &pn, loss, theta_tilde)?;
    let b = j0inv * DVector::from_vec(disc) * (gamma / (1.0 + gamma));
    Ok(b.iter().copied().collect())
}

/// Labeled-only ERM with uniform weights.
pub fn labeled_erm(labeled: &LabeledSample, loss: &LossSpec) -> Result<Vec<f64>> {
    let w = vec![1.0; labeled.len()];
    let problem =
        WeightedProblem::new(loss).with_block(labeled.covariates(), labeled.outcomes(), &w)?;
    Ok(solve_weighted(&problem, SeededRng::new(0, 0))?.0)
}

/// Standard normal `1 − β/2` quantile for a central interval at `level`.
pub fn normal_critical(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param(format!("level {level} outside (0, 1)")));
    }
    let z = Normal::standard();
    Ok(z.inverse_cdf(1.0 - (1.0 - level) / 2.0))
}

/// Labeled-only frequentist interval per coordinate. Mean and linear
/// regression use the normal interval from the γ = 0 sandwich; a quantile uses
/// binomial order-statistic bounds around the sample quantile.
pub fn classical_interval(
    labeled: &LabeledSample,
    loss: &LossSpec,
    level: f64,
) -> Result<Vec<(f64, f64)>> {
    let z = normal_critical(level)?;
    match loss {
        LossSpec::Mean | LossSpec::LinearRegression { .. } => {
            let theta = labeled_erm(labeled, loss)?;
            let pn = empirical_measure(labeled)?;
            let s = sandwich(labeled, &pn, loss, &theta, 0.0)?;
            Ok(theta
                .iter()
                .zip(s.sd())
                .map(|(t, sd)| (t - z * sd, t + z * sd))
                .collect())
        }
        LossSpec::Quantile { tau } => {
            let mut y = labeled.outcomes().as_real()?.to_vec();
            y.sort_by(f64::total_cmp);
            let n = y.len() as f64;
            let centre = n * tau;
            let half = z * (n * tau * (1.0 - tau)).sqrt();
            let lo = ((centre - half).floor() as i64).clamp(1, y.len() as i64) as usize;
            let hi = ((centre + half).ceil() as i64).clamp(1, y.len() as i64) as usize;
            Ok(vec![(y[lo - 1], y[hi - 1])])
        }
        other => Err(Error::Capability(format!(
            "no classical interval for the {} loss",
            other.name()
        ))),
    }
}

/// One method's interval in one benchmark replication.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub replication: usize,
    pub method: String,
    pub lower: f64,
    pub upper: f64,
    pub point: f64,
    pub truth: f64,
    pub covered: bool,
    pub interval_score: f64,
    pub width: f64,
}

impl BenchRecord {
    /// Derives coverage (endpoints count as covered), score and width.
    pub fn new(
        replication: usize,
        method: impl Into<String>,
        (lower, upper): (f64, f64),
        point: f64,
        truth: f64,
        beta: f64,
    ) -> Result<Self> {
        Ok(Self {
            replication,
            method: method.into(),
            lower,
            upper,
            point,
            truth,
            covered: lower <= truth && truth <= upper,
            interval_score: interval_score(lower, upper, truth, beta)?,
            width: upper - lower,
        })
    }
}

/// Mean and standard error `sd/√R` (sample sd, `R − 1` denominator).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Self {
        let r = values.len() as f64;
        let mean = values.iter().sum::<f64>() / r;
        let se = if values.len() < 2 {
            f64::NAN
        } else {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
            (var / r).sqrt()
        };
        Self { mean, se }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub method: String,
    pub replications: usize,
    pub coverage: MeanSe,
    /// Signed `point − truth`.
    pub bias: MeanSe,
    pub rmse: f64,
    pub interval_score: MeanSe,
    pub width: MeanSe,
}

/// Per-method summaries in order of first appearance.
pub fn aggregate_bench(records: &[BenchRecord]) -> Result<Vec<BenchSummary>> {
    if records.is_empty() {
        return Err(Error::param("no bench records to aggregate"));
    }
    let mut truth_of = std::collections::HashMap::new();
    let mut methods: Vec<&str> = Vec::new();
    for r in records {
        if r.covered != (r.lower <= r.truth && r.truth <= r.upper) {
            return Err(Error::param(format!(
                "record {} / {}: covered flag disagrees with its interval",
                r.replication, r.method
            )));
        }
        if let Some(t) = truth_of.insert(r.replication, r.truth) {
            if t != r.truth {
                return Err(Error::param(format!(
                    "replication {} has inconsistent truths {t} and {}",
                    r.replication, r.truth
                )));
            }
        }
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    Ok(methods
        .into_iter()
        .map(|m| {
            let rs: Vec<&BenchRecord> = records.iter().filter(|r| r.method == m).collect();
            let col = |f: fn(&BenchRecord) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<_>>();
            let bias = col(|r| r.point - r.truth);
            BenchSummary {
                method: m.to_string(),
                replications: rs.len(),
                coverage: MeanSe::of(&col(|r| f64::from(u8::from(r.covered)))),
                rmse: (bias.iter().map(|b| b * b).sum::<f64>() / bias.len() as f64).sqrt(),
                bias: MeanSe::of(&bias),
                interval_score: MeanSe::of(&col(|r| r.interval_score)),
                width: MeanSe::of(&col(|r| r.width)),
            }
        })
        .collect())
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Bench table: format tag, then CSV with [`BENCH_COLUMNS`].
pub fn write_bench_table<W: Write>(records: &[BenchRecord], mut out: W) -> Result<()> {
    writeln!(out, "{BENCH_FORMAT_TAG}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BENCH_COLUMNS).map_err(csv_error)?;
    for r in records {
        w.write_record([
            r.replication.to_string(),
            r.method.clone(),
            fmt_f64(r.lower),
            fmt_f64(r.upper),
            fmt_f64(r.point),
            fmt_f64(r.truth),
            u8::from(r.covered).to_string(),
            fmt_f64(r.interval_score),
            fmt_f64(r.width),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Summary table: format tag, then one CSV row per method.
pub fn write_bench_summary<W: Write>(summaries: &[BenchSummary], mut out: W) -> Result<()> {
    writeln!(out, "{SUMMARY_FORMAT_TAG}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "replications",
        "coverage",
        "coverage_se",
        "bias",
        "bias_se",
        "rmse",
        "interval_score",
        "interval_score_se",
        "width",
        "width_se",
    ])
    .map_err(csv_error)?;
    for s in summaries {
        w.write_record([
            s.method.clone(),
            s.replications.to_string(),
            fmt_f64(s.coverage.mean),
            fmt_f64(s.coverage.se),
            fmt_f64(s.bias.mean),
            fmt_f64(s.bias.se),
            fmt_f64(s.rmse),
            fmt_f64(s.interval_score.mean),
            fmt_f64(s.interval_score.se),
            fmt_f64(s.width.mean),
            fmt_f64(s.width.se),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
