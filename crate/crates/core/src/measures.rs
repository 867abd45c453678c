//! Labeled samples, finite atomic measures and the Dirichlet weight sampler.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Tolerance on the sum of a probability vector before renormalization.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// Tolerance on the total mass of an atomic measure or a Dirichlet draw.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A single outcome value.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Real(f64),
    Class { label: usize, num_classes: usize },
    ClassProbs(Vec<f64>),
}

/// Borrowed view of one outcome inside an [`Outcomes`] column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutcomeRef<'a> {
    Real(f64),
    Class(usize),
    Probs(&'a [f64]),
}

/// A column of outcomes, all of the same variant.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcomes {
    Real(Vec<f64>),
    Class {
        labels: Vec<usize>,
        num_classes: usize,
    },
    /// Row-major `len × num_classes` probability matrix.
    ClassProbs {
        probs: Vec<f64>,
        num_classes: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    Real,
    Class,
    ClassProbs,
}

impl std::fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutcomeKind::Real => "real",
            OutcomeKind::Class => "class",
            OutcomeKind::ClassProbs => "class-probabilities",
        })
    }
}

impl Outcomes {
    /// Collect individual outcomes into a column. All entries must share a
    /// variant; probability rows are validated and renormalized.
    pub fn from_vec(items: Vec<Outcome>) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::param("outcome list is empty"))?;
        match first {
            Outcome::Real(_) => items
                .into_iter()
                .map(|o| match o {
                    Outcome::Real(v) => Ok(v),
                    other => Err(Error::mismatch(format!(
                        "mixed outcome variants: {other:?}"
                    ))),
                })
                .collect::<Result<Vec<_>>>()
                .and_then(Outcomes::real),
            Outcome::Class { num_classes, .. } => {
                let c = *num_classes;
                let labels = items
                    .into_iter()
                    .map(|o| match o {
                        Outcome::Class { label, num_classes } if num_classes == c => Ok(label),
                        other => Err(Error::mismatch(format!(
                            "mixed outcome variants: {other:?}"
                        ))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Outcomes::class(labels, c)
            }
            Outcome::ClassProbs(p) => {
                let c = p.len();
                let mut flat = Vec::with_capacity(items.len() * c);
                for o in items {
                    match o {
                        Outcome::ClassProbs(p) if p.len() == c => flat.extend(p),
                        other => {
                            return Err(Error::mismatch(format!(
                                "mixed outcome variants: {other:?}"
                            )))
                        }
                    }
                }
                Outcomes::class_probs(flat, c)
            }
        }
    }

    pub fn real(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite outcome {v}")));
        }
        Ok(Outcomes::Real(values))
    }

    pub fn class(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::param("need at least two classes"));
        }
        if let Some(l) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::param(format!(
                "class label {l} out of range 0..{num_classes}"
            )));
        }
        Ok(Outcomes::Class {
            labels,
            num_classes,
        })
    }

    /// Probability rows are checked for nonnegativity and a positive sum, then
    /// divided by their sum.
    pub fn class_probs(mut probs: Vec<f64>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::param("need at least two classes"));
        }
        if !probs.len().is_multiple_of(num_classes) {
            return Err(Error::param("probability matrix is ragged"));
        }
        for (i, row) in probs.chunks_mut(num_classes).enumerate() {
            normalize_probs(row).map_err(|m| Error::param(format!("probability row {i}: {m}")))?;
        }
        Ok(Outcomes::ClassProbs { probs, num_classes })
    }

    pub fn len(&self) -> usize {
        match self {
            Outcomes::Real(v) => v.len(),
            Outcomes::Class { labels, .. } => labels.len(),
            Outcomes::ClassProbs { probs, num_classes } => probs.len() / num_classes,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> OutcomeKind {
        match self {
            Outcomes::Real(_) => OutcomeKind::Real,
            Outcomes::Class { .. } => OutcomeKind::Class,
            Outcomes::ClassProbs { .. } => OutcomeKind::ClassProbs,
        }
    }

    pub fn num_classes(&self) -> Option<usize> {
        match self {
            Outcomes::Real(_) => None,
            Outcomes::Class { num_classes, .. } | Outcomes::ClassProbs { num_classes, .. } => {
                Some(*num_classes)
            }
        }
    }

    #[inline]
    pub fn view(&self, i: usize) -> OutcomeRef<'_> {
        match self {
            Outcomes::Real(v) => OutcomeRef::Real(v[i]),
            Outcomes::Class { labels, .. } => OutcomeRef::Class(labels[i]),
            Outcomes::ClassProbs { probs, num_classes } => {
                OutcomeRef::Probs(&probs[i * num_classes..(i + 1) * num_classes])
            }
        }
    }

    pub fn get(&self, i: usize) -> Outcome {
        match self {
            Outcomes::Real(v) => Outcome::Real(v[i]),
            Outcomes::Class {
                labels,
                num_classes,
            } => Outcome::Class {
                label: labels[i],
                num_classes: *num_classes,
            },
            Outcomes::ClassProbs { .. } => match self.view(i) {
                OutcomeRef::Probs(p) => Outcome::ClassProbs(p.to_vec()),
                _ => unreachable!(),
            },
        }
    }

    pub fn as_real(&self) -> Result<&[f64]> {
        match self {
            Outcomes::Real(v) => Ok(v),
            other => Err(Error::mismatch(format!(
                "expected real outcomes, found {}",
                other.kind()
            ))),
        }
    }

    pub fn select(&self, idx: &[usize]) -> Outcomes {
        match self {
            Outcomes::Real(v) => Outcomes::Real(idx.iter().map(|&i| v[i]).collect()),
            Outcomes::Class {
                labels,
                num_classes,
            } => Outcomes::Class {
                labels: idx.iter().map(|&i| labels[i]).collect(),
                num_classes: *num_classes,
            },
            Outcomes::ClassProbs { probs, num_classes } => {
                let c = *num_classes;
                let mut out = Vec::with_capacity(idx.len() * c);
                for &i in idx {
                    out.extend_from_slice(&probs[i * c..(i + 1) * c]);
                }
                Outcomes::ClassProbs {
                    probs: out,
                    num_classes: c,
                }
            }
        }
    }
}

fn normalize_probs(row: &mut [f64]) -> std::result::Result<(), String> {
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err("entries must be finite and nonnegative".into());
    }
    let s: f64 = row.iter().sum();
    if s <= 0.0 {
        return Err("probabilities sum to zero".into());
    }
    if (s - 1.0).abs() > PROB_SUM_TOL || s != 1.0 {
        row.iter_mut().for_each(|p| *p /= s);
    }
    Ok(())
}

/// Row-major covariate matrix shared by reference count, so rectified measures
/// reuse the covariates of the measure they were derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariates {
    rows: usize,
    cols: usize,
    data: Arc<[f64]>,
}

impl Covariates {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::param(format!(
                "covariate buffer has {} entries, expected {rows}×{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("non-finite covariate"));
        }
        Ok(Self {
            rows,
            cols,
            data: data.into(),
        })
    }

    /// A covariate matrix with no columns (outcome-only data).
    pub fn empty(rows: usize) -> Self {
        Self {
            rows,
            cols: 0,
            data: Arc::from(Vec::new()),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::param("covariate rows have inconsistent widths"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn select(&self, idx: &[usize]) -> Covariates {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Covariates {
            rows: idx.len(),
            cols: self.cols,
            data: data.into(),
        }
    }
}

/// Labeled data `(X_i, Y_i)`, optionally carrying the AI imputation for each row
/// (needed to fit rectifiers on a calibration sample).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    x: Covariates,
    y: Outcomes,
    imputed: Option<Outcomes>,
}

impl LabeledSample {
    pub fn new(x: Covariates, y: Outcomes) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::param("labeled sample is empty"));
        }
        if x.rows() != y.len() {
            return Err(Error::param(format!(
                "{} covariate rows but {} outcomes",
                x.rows(),
                y.len()
            )));
        }
        if y.kind() == OutcomeKind::ClassProbs {
            return Err(Error::mismatch("labeled outcomes must be observed values"));
        }
        Ok(Self {
            x,
            y,
            imputed: None,
        })
    }

    /// Outcome-only sample with no covariates.
    pub fn from_outcomes(y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        Self::new(Covariates::empty(n), Outcomes::real(y)?)
    }

    pub fn with_imputed(mut self, imputed: Outcomes) -> Result<Self> {
        if imputed.len() != self.len() {
            return Err(Error::param(format!(
                "{} imputations for {} labeled rows",
                imputed.len(),
                self.len()
            )));
        }
        self.imputed = Some(imputed);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn covariates(&self) -> &Covariates {
        &self.x
    }

    pub fn outcomes(&self) -> &Outcomes {
        &self.y
    }

    pub fn imputed(&self) -> Option<&Outcomes> {
        self.imputed.as_ref()
    }

    pub fn select(&self, idx: &[usize]) -> LabeledSample {
        LabeledSample {
            x: self.x.select(idx),
            y: self.y.select(idx),
            imputed: self.imputed.as_ref().map(|o| o.select(idx)),
        }
    }
}

/// Finite weighted set of `(covariate, outcome)` atoms with unit total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    x: Covariates,
    y: Outcomes,
    weights: Vec<f64>,
}

impl AtomicMeasure {
    pub fn new(x: Covariates, y: Outcomes, weights: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::param("atomic measure needs at least one atom"));
        }
        if x.rows() != y.len() || weights.len() != y.len() {
            return Err(Error::param("atom, covariate and weight counts differ"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::param("atom weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::param(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { x, y, weights })
    }

    /// Uniform weights over the atoms.
    pub fn uniform(x: Covariates, y: Outcomes) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::param("atomic measure needs at least one atom"));
        }
        Self::new(x, y, uniform_weights(n))
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn covariates(&self) -> &Covariates {
        &self.x
    }

    pub fn outcomes(&self) -> &Outcomes {
        &self.y
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Same covariates and weights, new outcome column.
    pub fn with_outcomes(&self, y: Outcomes) -> Result<Self> {
        if y.len() != self.len() {
            return Err(Error::param(
                "replacement outcome column has the wrong length",
            ));
        }
        Ok(Self {
            x: self.x.clone(),
            y,
            weights: self.weights.clone(),
        })
    }

    /// Weighted mean of real outcomes.
    pub fn mean_outcome(&self) -> Result<f64> {
        let y = self.y.as_real()?;
        Ok(y.iter().zip(&self.weights).map(|(y, w)| y * w).sum())
    }
}

/// `n` weights of `1/n` whose left-to-right sum is exactly one.
fn uniform_weights(n: usize) -> Vec<f64> {
    let mut w = vec![1.0 / n as f64; n];
    if n > 1 {
        let head: f64 = w[..n - 1].iter().sum();
        w[n - 1] = 1.0 - head;
    }
    w
}

/// Empirical measure of a sample: one atom per row, weight `1/n` each.
pub fn empirical_measure(sample: &LabeledSample) -> Result<AtomicMeasure> {
    if sample.is_empty() {
        return Err(Error::param("empirical measure of an empty sample"));
    }
    AtomicMeasure::uniform(sample.x.clone(), sample.y.clone())
}

/// Joint Dirichlet draw over labeled rows and base atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletWeights {
    pub labeled: Vec<f64>,
    pub base: Vec<f64>,
}

impl DirichletWeights {
    pub fn total(&self) -> f64 {
        self.labeled.iter().chain(&self.base).sum()
    }
}

/// Draw `(w_1..w_n, w̃_1..w̃_k) ~ Dirichlet(1,…,1, α/k,…,α/k)` by normalizing
/// independent Gamma variates. A zero variate from underflow is clamped to the
/// smallest positive normal value.
pub fn sample_dirichlet_weights(
    n: usize,
    k: usize,
    alpha: f64,
    rng: SeededRng,
) -> Result<DirichletWeights> {
    let mut g = rng.generator();
    sample_dirichlet_with(n, k, alpha, &mut g)
}

pub(crate) fn sample_dirichlet_with<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<DirichletWeights> {
    if n == 0 || k == 0 {
        return Err(Error::param("Dirichlet weights need n ≥ 1 and k ≥ 1"));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::param(format!(
            "Dirichlet concentration must be positive, got {alpha}"
        )));
    }
    let unit = Gamma::new(1.0, 1.0).expect("unit gamma");
    let small = Gamma::new(alpha / k as f64, 1.0)
        .map_err(|e| Error::param(format!("base gamma shape: {e}")))?;
    let mut labeled: Vec<f64> = (0..n).map(|_| unit.sample(rng)).collect();
    let mut base: Vec<f64> = (0..k).map(|_| small.sample(rng)).collect();
    normalize_simplex(&mut labeled, &mut base);
    Ok(DirichletWeights { labeled, base })
}

/// Flat Dirichlet(1,…,1) over `n` entries (the Bayesian bootstrap).
pub(crate) fn sample_flat_dirichlet<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let unit = Gamma::new(1.0, 1.0).expect("unit gamma");
    let mut w: Vec<f64> = (0..n).map(|_| unit.sample(rng)).collect();
    normalize_simplex(&mut w, &mut []);
    w
}

fn normalize_simplex(a: &mut [f64], b: &mut [f64]) {
    let clamp = |v: &mut f64| {
        if *v <= 0.0 {
            *v = f64::MIN_POSITIVE;
        }
    };
    a.iter_mut().chain(b.iter_mut()).for_each(clamp);
    let s: f64 = a.iter().chain(b.iter()).sum();
    a.iter_mut().chain(b.iter_mut()).for_each(|v| *v /= s);
    a.iter_mut().chain(b.iter_mut()).for_each(clamp);
}

/// `n` row indices drawn uniformly with replacement.
pub(crate) fn bootstrap_indices<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Nonparametric bootstrap resample of the rows.
pub fn resample_nonparametric_bootstrap(
    sample: &LabeledSample,
    rng: SeededRng,
) -> Result<LabeledSample> {
    if sample.is_empty() {
        return Err(Error::param("cannot resample an empty sample"));
    }
    let idx = bootstrap_indices(sample.len(), &mut rng.generator());
    Ok(sample.select(&idx))
}

/// Replace every probability-vector outcome by a class label drawn from it.
pub fn realize_class_labels(base: &AtomicMeasure, rng: SeededRng) -> Result<AtomicMeasure> {
    realize_class_labels_with(base, &mut rng.generator())
}

pub(crate) fn realize_class_labels_with<R: Rng + ?Sized>(
    base: &AtomicMeasure,
    rng: &mut R,
) -> Result<AtomicMeasure> {
    let Outcomes::ClassProbs { probs, num_classes } = &base.y else {
        return Err(Error::mismatch(format!(
            "class labels can only be realized from probability outcomes, found {}",
            base.y.kind()
        )));
    };
    let c = *num_classes;
    let labels = probs
        .chunks(c)
        .map(|p| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (j, pj) in p.iter().enumerate() {
                acc += pj;
                if u < acc {
                    return j;
                }
            }
            // u landed in the rounding gap above the last cumulative sum
            p.iter().rposition(|&pj| pj > 0.0).unwrap_or(c - 1)
        })
        .collect();
    base.with_outcomes(Outcomes::Class {
        labels,
        num_classes: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_labeled_single_base_is_normalized() {
        for alpha in [1e-3, 1.0, 50.0] {
            let w = sample_dirichlet_weights(1, 1, alpha, SeededRng::new(3, 0)).unwrap();
            assert!((w.labeled[0] + w.base[0] - 1.0).abs() <= SIMPLEX_TOL);
        }
    }

    #[test]
    fn dirichlet_rejects_bad_parameters() {
        assert!(sample_dirichlet_weights(0, 1, 1.0, SeededRng::new(0, 0)).is_err());
        assert!(sample_dirichlet_weights(1, 0, 1.0, SeededRng::new(0, 0)).is_err());
        assert!(sample_dirichlet_weights(1, 1, 0.0, SeededRng::new(0, 0)).is_err());
        assert!(sample_dirichlet_weights(1, 1, -2.0, SeededRng::new(0, 0)).is_err());
    }

    #[test]
    fn tiny_shapes_stay_on_open_simplex() {
        let w = sample_dirichlet_weights(5, 5000, 1e-3, SeededRng::new(9, 2)).unwrap();
        assert!(w.labeled.iter().chain(&w.base).all(|&v| v > 0.0));
        assert!((w.total() - 1.0).abs() <= SIMPLEX_TOL);
    }

    #[test]
    fn empirical_measure_weights() {
        let s = LabeledSample::from_outcomes(vec![2.0]).unwrap();
        let m = empirical_measure(&s).unwrap();
        assert_eq!(m.weights(), &[1.0]);

        let s = LabeledSample::from_outcomes(vec![1.0, 1.0, 3.0, 4.0]).unwrap();
        let m = empirical_measure(&s).unwrap();
        assert_eq!(m.len(), 4);
        assert!(m.weights().iter().all(|&w| w == 0.25));
        assert_eq!(m.outcomes().as_real().unwrap(), &[1.0, 1.0, 3.0, 4.0]);
    }

    #[test]
    fn empirical_total_weight_is_exactly_one() {
        for n in 1..300 {
            let s = LabeledSample::from_outcomes(vec![0.0; n]).unwrap();
            assert_eq!(empirical_measure(&s).unwrap().total_weight(), 1.0, "n={n}");
        }
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(LabeledSample::from_outcomes(vec![]).is_err());
        assert!(AtomicMeasure::uniform(Covariates::empty(0), Outcomes::Real(vec![])).is_err());
    }

    #[test]
    fn bootstrap_of_single_row_is_identity() {
        let s = LabeledSample::from_outcomes(vec![7.5]).unwrap();
        let r = resample_nonparametric_bootstrap(&s, SeededRng::new(1, 1)).unwrap();
        assert_eq!(r, s);
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let s = LabeledSample::from_outcomes((0..50).map(f64::from).collect()).unwrap();
        let a = resample_nonparametric_bootstrap(&s, SeededRng::new(4, 8)).unwrap();
        let b = resample_nonparametric_bootstrap(&s, SeededRng::new(4, 8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bootstrap_distinct_fraction() {
        // P(row included) = 1 - (1 - 1/n)^n
        let n: usize = 100;
        let expected = 1.0 - (1.0 - 1.0 / n as f64).powi(n as i32);
        let s = LabeledSample::from_outcomes((0..n).map(|i| i as f64).collect()).unwrap();
        let reps = 1000;
        let mut total = 0.0;
        for r in 0..reps {
            let b = resample_nonparametric_bootstrap(&s, SeededRng::new(11, r)).unwrap();
            let mut v: Vec<f64> = b.outcomes().as_real().unwrap().to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            total += v.len() as f64 / n as f64;
        }
        let frac = total / reps as f64;
        assert!((frac - expected).abs() < 0.03, "{frac} vs {expected}");
    }

    fn probs_measure(rows: Vec<Vec<f64>>) -> AtomicMeasure {
        let c = rows[0].len();
        let n = rows.len();
        AtomicMeasure::uniform(
            Covariates::empty(n),
            Outcomes::class_probs(rows.concat(), c).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn one_hot_realizes_deterministically() {
        let m = probs_measure(vec![vec![0.0, 0.0, 1.0]; 20]);
        let r = realize_class_labels(&m, SeededRng::new(0, 0)).unwrap();
        match r.outcomes() {
            Outcomes::Class {
                labels,
                num_classes,
            } => {
                assert_eq!(*num_classes, 3);
                assert!(labels.iter().all(|&l| l == 2));
            }
            _ => panic!("expected class labels"),
        }
        assert_eq!(r.weights(), m.weights());
    }

    #[test]
    fn fair_coin_realization_frequency() {
        let m = probs_measure(vec![vec![0.5, 0.5]; 10_000]);
        let r = realize_class_labels(&m, SeededRng::new(5, 0)).unwrap();
        let Outcomes::Class { labels, .. } = r.outcomes() else {
            panic!()
        };
        let f = labels.iter().filter(|&&l| l == 0).count() as f64 / labels.len() as f64;
        assert!((f - 0.5).abs() < 0.02, "{f}");
    }

    #[test]
    fn realization_rejects_real_outcomes() {
        let m =
            AtomicMeasure::uniform(Covariates::empty(2), Outcomes::Real(vec![1.0, 2.0])).unwrap();
        assert!(matches!(
            realize_class_labels(&m, SeededRng::new(0, 0)),
            Err(Error::Type(_))
        ));
    }

    #[test]
    fn mixed_variants_rejected() {
        let r = Outcomes::from_vec(vec![
            Outcome::Real(1.0),
            Outcome::Class {
                label: 0,
                num_classes: 2,
            },
        ]);
        assert!(matches!(r, Err(Error::Type(_))));
    }

    #[test]
    fn probability_rows_are_renormalized() {
        let o = Outcomes::class_probs(vec![0.2, 0.8001], 2).unwrap();
        let OutcomeRef::Probs(p) = o.view(0) else {
            panic!()
        };
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(Outcomes::class_probs(vec![0.0, 0.0], 2).is_err());
    }
}
