//! Loss families, their scores and Hessians, and weighted empirical-risk
//! solvers.
//!
//! Every posterior draw reduces to one call of [`solve_weighted`] on a problem
//! whose atoms are the inference rows and the (rectified) base atoms, weighted
//! by a Dirichlet draw.

mod linear;
mod logistic;
mod mlp;

use std::ops::{Deref, DerefMut};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::measures::{Covariates, OutcomeKind, OutcomeRef, Outcomes};
use crate::rng::SeededRng;

pub use logistic::{softmax_in_place, LOGISTIC_GRAD_TOL, LOGISTIC_MAX_ITER, MIN_RIDGE};
pub use mlp::MlpConfig;

/// A risk family `ℓ_θ`.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    /// Squared loss `(y − θ)²/2`; the minimizer is the mean.
    Mean,
    /// Check loss `τ(y − q)⁺ + (1 − τ)(q − y)⁺`.
    Quantile { tau: f64 },
    /// Squared loss `(y − zᵀθ)²/2` with `z = (1, x)` when `intercept` is set.
    LinearRegression { intercept: bool },
    /// Cross-entropy of `softmax(Θ (1, x))`, `Θ` stored row-major `C × (1 + d_x)`.
    MultinomialLogistic { num_classes: usize, ridge: f64 },
    /// Cross-entropy of a one-hidden-layer ReLU network.
    Mlp(MlpConfig),
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            LossSpec::Quantile { tau } if !(*tau > 0.0 && *tau < 1.0) => {
                Err(Error::param(format!("quantile level {tau} outside (0, 1)")))
            }
            LossSpec::MultinomialLogistic { num_classes, ridge } => {
                if *num_classes < 2 {
                    Err(Error::param(
                        "multinomial logistic needs at least two classes",
                    ))
                } else if !(*ridge >= 0.0) || !ridge.is_finite() {
                    Err(Error::param(format!(
                        "ridge must be nonnegative, got {ridge}"
                    )))
                } else {
                    Ok(())
                }
            }
            LossSpec::Mlp(cfg) => cfg.validate(),
            _ => Ok(()),
        }
    }

    /// Parameter dimension for covariates of width `d_x`.
    pub fn dim(&self, d_x: usize) -> usize {
        match self {
            LossSpec::Mean | LossSpec::Quantile { .. } => 1,
            LossSpec::LinearRegression { intercept } => d_x + usize::from(*intercept),
            LossSpec::MultinomialLogistic { num_classes, .. } => num_classes * (d_x + 1),
            LossSpec::Mlp(cfg) => cfg.dim(d_x),
        }
    }

    pub fn num_classes(&self) -> Option<usize> {
        match self {
            LossSpec::MultinomialLogistic { num_classes, .. } => Some(*num_classes),
            LossSpec::Mlp(cfg) => Some(cfg.num_classes),
            _ => None,
        }
    }

    pub fn is_classification(&self) -> bool {
        self.num_classes().is_some()
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, LossSpec::Quantile { .. })
    }

    pub fn has_hessian(&self) -> bool {
        matches!(
            self,
            LossSpec::Mean
                | LossSpec::LinearRegression { .. }
                | LossSpec::MultinomialLogistic { .. }
        )
    }

    /// Outcome variant the loss consumes.
    pub fn outcome_kind(&self) -> OutcomeKind {
        if self.is_classification() {
            OutcomeKind::Class
        } else {
            OutcomeKind::Real
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossSpec::Mean => "mean",
            LossSpec::Quantile { .. } => "quantile",
            LossSpec::LinearRegression { .. } => "linear",
            LossSpec::MultinomialLogistic { .. } => "logistic",
            LossSpec::Mlp(_) => "mlp",
        }
    }

    pub(crate) fn check_outcomes(&self, y: &Outcomes) -> Result<()> {
        if y.kind() != self.outcome_kind() {
            return Err(Error::mismatch(format!(
                "{} loss needs {} outcomes, found {}",
                self.name(),
                self.outcome_kind(),
                y.kind()
            )));
        }
        if let (Some(c), Some(cy)) = (self.num_classes(), y.num_classes()) {
            if c != cy {
                return Err(Error::mismatch(format!(
                    "loss has {c} classes, outcomes have {cy}"
                )));
            }
        }
        Ok(())
    }
}

/// Flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta(pub Vec<f64>);

impl Deref for Theta {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Theta {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Theta {
    fn from(v: Vec<f64>) -> Self {
        Theta(v)
    }
}

/// One data point `(x, y)`.
#[derive(Debug, Clone, Copy)]
pub struct Atom<'a> {
    pub x: &'a [f64],
    pub y: OutcomeRef<'a>,
}

impl<'a> Atom<'a> {
    pub fn new(x: &'a [f64], y: OutcomeRef<'a>) -> Self {
        Self { x, y }
    }

    pub fn real(y: f64) -> Atom<'static> {
        Atom {
            x: &[],
            y: OutcomeRef::Real(y),
        }
    }

    fn real_y(&self) -> Result<f64> {
        match self.y {
            OutcomeRef::Real(v) => Ok(v),
            other => Err(Error::mismatch(format!(
                "expected a real outcome, found {other:?}"
            ))),
        }
    }

    fn class_y(&self, c: usize) -> Result<usize> {
        match self.y {
            OutcomeRef::Class(l) if l < c => Ok(l),
            other => Err(Error::mismatch(format!(
                "expected a class label < {c}, found {other:?}"
            ))),
        }
    }
}

fn check_dim(spec: &LossSpec, theta: &[f64], d_x: usize) -> Result<()> {
    let want = spec.dim(d_x);
    if theta.len() != want {
        return Err(Error::mismatch(format!(
            "{} loss with {d_x} covariates needs {want} parameters, got {}",
            spec.name(),
            theta.len()
        )));
    }
    Ok(())
}

/// `z = (1, x)` or `x`.
#[inline]
fn design_dot(intercept: bool, theta: &[f64], x: &[f64]) -> f64 {
    if intercept {
        theta[0] + theta[1..].iter().zip(x).map(|(t, x)| t * x).sum::<f64>()
    } else {
        theta.iter().zip(x).map(|(t, x)| t * x).sum()
    }
}

#[inline]
fn design_at(intercept: bool, x: &[f64], j: usize) -> f64 {
    match (intercept, j) {
        (true, 0) => 1.0,
        (true, j) => x[j - 1],
        (false, j) => x[j],
    }
}

/// `ℓ_θ(x, y)`.
pub fn loss_value(spec: &LossSpec, theta: &[f64], atom: Atom<'_>) -> Result<f64> {
    check_dim(spec, theta, atom.x.len())?;
    match spec {
        LossSpec::Mean => {
            let r = atom.real_y()? - theta[0];
            Ok(0.5 * r * r)
        }
        LossSpec::Quantile { tau } => {
            let r = atom.real_y()? - theta[0];
            Ok(if r > 0.0 { tau * r } else { (tau - 1.0) * r })
        }
        LossSpec::LinearRegression { intercept } => {
            let r = atom.real_y()? - design_dot(*intercept, theta, atom.x);
            Ok(0.5 * r * r)
        }
        LossSpec::MultinomialLogistic { num_classes, .. } => {
            let y = atom.class_y(*num_classes)?;
            Ok(logistic::cross_entropy(*num_classes, theta, atom.x, y))
        }
        LossSpec::Mlp(cfg) => {
            let y = atom.class_y(cfg.num_classes)?;
            Ok(mlp::Network::new(cfg, atom.x.len(), theta).cross_entropy(atom.x, y))
        }
    }
}

/// Gradient (subgradient for the check loss) `g_θ(x, y)`.
///
/// The check-loss convention is `(1 − τ)·𝟙{y ≤ q} − τ·𝟙{y > q}`, consistent with
/// the weighted-quantile solver's "cumulative weight ≥ τ" rule.
pub fn score(spec: &LossSpec, theta: &[f64], atom: Atom<'_>) -> Result<Vec<f64>> {
    check_dim(spec, theta, atom.x.len())?;
    match spec {
        LossSpec::Mean => Ok(vec![theta[0] - atom.real_y()?]),
        LossSpec::Quantile { tau } => {
            let y = atom.real_y()?;
            Ok(vec![if y <= theta[0] { 1.0 - tau } else { -tau }])
        }
        LossSpec::LinearRegression { intercept } => {
            let r = design_dot(*intercept, theta, atom.x) - atom.real_y()?;
            Ok((0..theta.len())
                .map(|j| design_at(*intercept, atom.x, j) * r)
                .collect())
        }
        LossSpec::MultinomialLogistic { num_classes, .. } => {
            let y = atom.class_y(*num_classes)?;
            let mut g = vec![0.0; theta.len()];
            logistic::add_score(*num_classes, theta, atom.x, y, 1.0, &mut g);
            Ok(g)
        }
        LossSpec::Mlp(cfg) => {
            let y = atom.class_y(cfg.num_classes)?;
            let net = mlp::Network::new(cfg, atom.x.len(), theta);
            let mut g = vec![0.0; theta.len()];
            net.add_gradient(atom.x, y, 1.0, &mut g);
            Ok(g)
        }
    }
}

/// Per-atom Hessian `ġ_θ(x, y)` for the twice-differentiable losses.
pub fn hessian(spec: &LossSpec, theta: &[f64], atom: Atom<'_>) -> Result<DMatrix<f64>> {
    check_dim(spec, theta, atom.x.len())?;
    match spec {
        LossSpec::Mean => {
            atom.real_y()?;
            Ok(DMatrix::from_element(1, 1, 1.0))
        }
        LossSpec::LinearRegression { intercept } => {
            atom.real_y()?;
            let d = theta.len();
            Ok(DMatrix::from_fn(d, d, |i, j| {
                design_at(*intercept, atom.x, i) * design_at(*intercept, atom.x, j)
            }))
        }
        LossSpec::MultinomialLogistic { num_classes, .. } => {
            atom.class_y(*num_classes)?;
            let d = theta.len();
            let mut h = DMatrix::zeros(d, d);
            logistic::add_hessian(*num_classes, theta, atom.x, 1.0, &mut h);
            Ok(h)
        }
        LossSpec::Quantile { .. } | LossSpec::Mlp(_) => Err(Error::Capability(format!(
            "{} loss has no analytic Hessian",
            spec.name()
        ))),
    }
}

/// Class probabilities predicted by a classification model at `x`.
pub fn predict_proba(spec: &LossSpec, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_dim(spec, theta, x.len())?;
    match spec {
        LossSpec::MultinomialLogistic { num_classes, .. } => {
            Ok(logistic::probabilities(*num_classes, theta, x))
        }
        LossSpec::Mlp(cfg) => Ok(mlp::Network::new(cfg, x.len(), theta).probabilities(x)),
        other => Err(Error::mismatch(format!(
            "{} loss is not a classifier",
            other.name()
        ))),
    }
}

/// One block of weighted atoms sharing covariate and outcome storage.
#[derive(Debug, Clone, Copy)]
pub struct WeightedBlock<'a> {
    pub x: &'a Covariates,
    pub y: &'a Outcomes,
    pub w: &'a [f64],
}

/// `Σ_i w_i ℓ_θ(X_i, Y_i)` over one or more blocks of atoms.
///
/// Weights must be positive; they need not sum to one.
#[derive(Debug, Clone)]
pub struct WeightedProblem<'a> {
    pub loss: &'a LossSpec,
    blocks: Vec<WeightedBlock<'a>>,
}

impl<'a> WeightedProblem<'a> {
    pub fn new(loss: &'a LossSpec) -> Self {
        Self {
            loss,
            blocks: Vec::new(),
        }
    }

    pub fn with_block(mut self, x: &'a Covariates, y: &'a Outcomes, w: &'a [f64]) -> Result<Self> {
        if x.rows() != y.len() || y.len() != w.len() {
            return Err(Error::param(format!(
                "block sizes differ: {} covariate rows, {} outcomes, {} weights",
                x.rows(),
                y.len(),
                w.len()
            )));
        }
        if let Some(first) = self.blocks.first() {
            if first.x.cols() != x.cols() {
                return Err(Error::mismatch("blocks have different covariate widths"));
            }
        }
        if w.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::param("weights must be finite and nonnegative"));
        }
        self.loss.check_outcomes(y)?;
        self.blocks.push(WeightedBlock { x, y, w });
        Ok(self)
    }

    pub fn blocks(&self) -> &[WeightedBlock<'a>] {
        &self.blocks
    }

    pub fn d_x(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.x.cols())
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.w.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total_weight(&self) -> f64 {
        self.blocks.iter().flat_map(|b| b.w.iter()).sum()
    }

    /// `(atom, weight)` pairs in block order.
    pub fn atoms(&self) -> impl Iterator<Item = (Atom<'_>, f64)> + '_ {
        self.blocks
            .iter()
            .flat_map(|b| (0..b.w.len()).map(move |i| (Atom::new(b.x.row(i), b.y.view(i)), b.w[i])))
    }

    /// Weighted objective value.
    pub fn objective(&self, theta: &[f64]) -> Result<f64> {
        self.atoms()
            .map(|(a, w)| Ok(w * loss_value(self.loss, theta, a)?))
            .sum()
    }
}

/// Minimize the weighted objective.
///
/// `rng` seeds the initialization of non-convex models; the convex families are
/// solved deterministically and ignore it.
pub fn solve_weighted(problem: &WeightedProblem<'_>, rng: SeededRng) -> Result<Theta> {
    problem.loss.validate()?;
    let total = problem.total_weight();
    if problem.is_empty() || !(total > 0.0) {
        return Err(Error::param("weighted problem has no positive mass"));
    }
    match problem.loss {
        LossSpec::Mean => {
            let s: f64 = problem
                .blocks
                .iter()
                .map(|b| {
                    let y = b.y.as_real().expect("checked by with_block");
                    y.iter().zip(b.w).map(|(y, w)| y * w).sum::<f64>()
                })
                .sum();
            Ok(Theta(vec![s / total]))
        }
        LossSpec::Quantile { tau } => Ok(Theta(vec![weighted_quantile(problem, *tau)])),
        LossSpec::LinearRegression { intercept } => linear::solve(problem, *intercept),
        LossSpec::MultinomialLogistic { num_classes, ridge } => {
            logistic::solve(problem, *num_classes, *ridge)
        }
        LossSpec::Mlp(cfg) => Ok(mlp::train(problem, cfg, rng)),
    }
}

/// Smallest atom value `q` whose normalized cumulative weight `Σ w 𝟙{y ≤ q}`
/// reaches `τ`. This is the smallest minimizer of the weighted check loss.
fn weighted_quantile(problem: &WeightedProblem<'_>, tau: f64) -> f64 {
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(problem.len());
    for b in &problem.blocks {
        let y = b.y.as_real().expect("checked by with_block");
        pairs.extend(y.iter().copied().zip(b.w.iter().copied()));
    }
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let target = tau * total;
    let mut cum = 0.0;
    for &(y, w) in &pairs {
        cum += w;
        if cum >= target {
            return y;
        }
    }
    pairs.last().expect("nonempty").0
}

/// Largest relative discrepancy `|analytic − central difference| / (1 + |analytic|)`
/// between the score and the loss, and between the Hessian and the score when
/// the loss has one.
pub fn finite_diff_check(spec: &LossSpec, theta: &[f64], atom: Atom<'_>, h: f64) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&h) {
        return Err(Error::param(format!(
            "finite-difference step {h} outside [1e-7, 1e-3]"
        )));
    }
    let g = score(spec, theta, atom)?;
    let mut worst: f64 = 0.0;
    let mut probe = theta.to_vec();
    for j in 0..theta.len() {
        probe[j] = theta[j] + h;
        let up = loss_value(spec, &probe, atom)?;
        probe[j] = theta[j] - h;
        let down = loss_value(spec, &probe, atom)?;
        probe[j] = theta[j];
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((g[j] - fd).abs() / (1.0 + g[j].abs()));
    }
    if spec.has_hessian() {
        let hm = hessian(spec, theta, atom)?;
        for j in 0..theta.len() {
            probe[j] = theta[j] + h;
            let up = score(spec, &probe, atom)?;
            probe[j] = theta[j] - h;
            let down = score(spec, &probe, atom)?;
            probe[j] = theta[j];
            for i in 0..theta.len() {
                let fd = (up[i] - down[i]) / (2.0 * h);
                worst = worst.max((hm[(i, j)] - fd).abs() / (1.0 + hm[(i, j)].abs()));
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_problem<'a>(
        loss: &'a LossSpec,
        x: &'a Covariates,
        y: &'a Outcomes,
        w: &'a [f64],
    ) -> WeightedProblem<'a> {
        WeightedProblem::new(loss).with_block(x, y, w).unwrap()
    }

    #[test]
    fn loss_values() {
        assert_eq!(
            loss_value(&LossSpec::Mean, &[3.0], Atom::real(3.0)).unwrap(),
            0.0
        );
        let q = LossSpec::Quantile { tau: 0.25 };
        assert_eq!(loss_value(&q, &[0.0], Atom::real(4.0)).unwrap(), 1.0);
        let lr = LossSpec::LinearRegression { intercept: false };
        let a = Atom::new(&[1.0], OutcomeRef::Real(2.0));
        assert_eq!(loss_value(&lr, &[2.0], a).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_type_error() {
        let lr = LossSpec::LinearRegression { intercept: true };
        let a = Atom::new(&[1.0], OutcomeRef::Real(2.0));
        assert!(matches!(loss_value(&lr, &[2.0], a), Err(Error::Type(_))));
    }

    #[test]
    fn scores() {
        assert_eq!(
            score(&LossSpec::Mean, &[1.0], Atom::real(4.0)).unwrap(),
            vec![-3.0]
        );
        let lr = LossSpec::LinearRegression { intercept: false };
        let a = Atom::new(&[1.0, 2.0], OutcomeRef::Real(0.0));
        assert_eq!(score(&lr, &[1.0, 1.0], a).unwrap(), vec![3.0, 6.0]);
        let q = LossSpec::Quantile { tau: 0.5 };
        assert_eq!(score(&q, &[2.0], Atom::real(5.0)).unwrap(), vec![-0.5]);
        // tie goes to the left branch
        assert_eq!(score(&q, &[2.0], Atom::real(2.0)).unwrap(), vec![0.5]);
    }

    #[test]
    fn hessians() {
        assert_eq!(
            hessian(&LossSpec::Mean, &[0.3], Atom::real(9.0)).unwrap()[(0, 0)],
            1.0
        );
        let lr = LossSpec::LinearRegression { intercept: false };
        let h = hessian(
            &lr,
            &[0.0, 0.0],
            Atom::new(&[1.0, 2.0], OutcomeRef::Real(0.0)),
        )
        .unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
        let q = LossSpec::Quantile { tau: 0.5 };
        assert!(matches!(
            hessian(&q, &[0.0], Atom::real(1.0)),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn logistic_hessian_matches_score_differences() {
        let spec = LossSpec::MultinomialLogistic {
            num_classes: 2,
            ridge: 0.0,
        };
        let a = Atom::new(&[1.0], OutcomeRef::Class(1));
        let err = finite_diff_check(&spec, &[0.0; 4], a, 1e-5).unwrap();
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn mean_score_is_exactly_linear() {
        let err = finite_diff_check(&LossSpec::Mean, &[0.7], Atom::real(-1.3), 1e-4).unwrap();
        assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn mean_solver() {
        let x = Covariates::empty(2);
        let y = Outcomes::Real(vec![1.0, 5.0]);
        let p = real_problem(&LossSpec::Mean, &x, &y, &[0.5, 0.5]);
        assert_eq!(
            solve_weighted(&p, SeededRng::new(0, 0)).unwrap().0,
            vec![3.0]
        );
        let p = real_problem(&LossSpec::Mean, &x, &y, &[0.25, 0.75]);
        assert_eq!(
            solve_weighted(&p, SeededRng::new(0, 0)).unwrap().0,
            vec![4.0]
        );
    }

    #[test]
    fn mean_solver_is_scale_equivariant_in_weights() {
        let x = Covariates::empty(3);
        let y = Outcomes::Real(vec![1.0, -2.0, 7.25]);
        let w = [0.2, 0.3, 0.5];
        let scaled: Vec<f64> = w.iter().map(|v| v * 8.0).collect();
        let a = solve_weighted(
            &real_problem(&LossSpec::Mean, &x, &y, &w),
            SeededRng::new(0, 0),
        );
        let b = solve_weighted(
            &real_problem(&LossSpec::Mean, &x, &y, &scaled),
            SeededRng::new(0, 0),
        );
        assert_eq!(a.unwrap(), b.unwrap());
    }

    #[test]
    fn quantile_solver_median_of_three() {
        let x = Covariates::empty(3);
        let y = Outcomes::Real(vec![3.0, 1.0, 2.0]);
        let spec = LossSpec::Quantile { tau: 0.5 };
        let p = real_problem(&spec, &x, &y, &[1.0, 1.0, 1.0]);
        assert_eq!(
            solve_weighted(&p, SeededRng::new(0, 0)).unwrap().0,
            vec![2.0]
        );
    }

    #[test]
    fn regression_interpolates_exact_line() {
        let x = Covariates::new(4, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = Outcomes::Real(vec![2.0, 4.0, 6.0, 8.0]);
        let spec = LossSpec::LinearRegression { intercept: false };
        let p = real_problem(&spec, &x, &y, &[0.1, 3.0, 0.7, 1.9]);
        let t = solve_weighted(&p, SeededRng::new(0, 0)).unwrap();
        assert!((t[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_design_is_rank_deficient() {
        let x = Covariates::new(3, 2, vec![1.0, 2.0, 2.0, 4.0, 3.0, 6.0]).unwrap();
        let y = Outcomes::Real(vec![1.0, 2.0, 3.0]);
        let spec = LossSpec::LinearRegression { intercept: false };
        let p = real_problem(&spec, &x, &y, &[1.0, 1.0, 1.0]);
        assert!(matches!(
            solve_weighted(&p, SeededRng::new(0, 0)),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn loss_mismatch_rejected_by_problem() {
        let x = Covariates::empty(1);
        let y = Outcomes::Class {
            labels: vec![0],
            num_classes: 2,
        };
        assert!(WeightedProblem::new(&LossSpec::Mean)
            .with_block(&x, &y, &[1.0])
            .is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(LossSpec::Quantile { tau: 1.0 }.validate().is_err());
        assert!(LossSpec::Quantile { tau: 0.0 }.validate().is_err());
        assert!(LossSpec::MultinomialLogistic {
            num_classes: 1,
            ridge: 0.0
        }
        .validate()
        .is_err());
    }
}
