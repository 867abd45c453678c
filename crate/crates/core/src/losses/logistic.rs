//! Multinomial logistic regression with full `C × (1 + d_x)` parameterization.
//!
//! Row `c` of `Θ` is `(b_c, w_c1, …, w_cd)`. The parameterization is invariant
//! under adding a common row, so a ridge penalty of at least [`MIN_RIDGE`] is
//! always applied to keep the weighted objective strictly convex.

use nalgebra::{DMatrix, DVector};

use super::{Theta, WeightedProblem};
use crate::error::{Error, Result};
use crate::linalg;
use crate::measures::Outcomes;

pub const MIN_RIDGE: f64 = 1e-8;
pub const LOGISTIC_GRAD_TOL: f64 = 1e-8;
pub const LOGISTIC_MAX_ITER: usize = 200;

pub fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for e in v.iter_mut() {
        *e = (*e - m).exp();
        s += *e;
    }
    v.iter_mut().for_each(|e| *e /= s);
}

#[inline]
fn logits(c: usize, theta: &[f64], x: &[f64], out: &mut [f64]) {
    let p = x.len() + 1;
    for (k, o) in out.iter_mut().enumerate().take(c) {
        let row = &theta[k * p..(k + 1) * p];
        *o = row[0] + row[1..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

pub(crate) fn probabilities(c: usize, theta: &[f64], x: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; c];
    logits(c, theta, x, &mut p);
    softmax_in_place(&mut p);
    p
}

pub(super) fn cross_entropy(c: usize, theta: &[f64], x: &[f64], y: usize) -> f64 {
    let mut z = vec![0.0; c];
    logits(c, theta, x, &mut z);
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    lse - z[y]
}

/// `g += w · (p − e_y) ⊗ (1, x)`.
pub(super) fn add_score(c: usize, theta: &[f64], x: &[f64], y: usize, w: f64, g: &mut [f64]) {
    let p = probabilities(c, theta, x);
    add_score_from_probs(&p, x, y, w, g);
}

#[inline]
fn add_score_from_probs(p: &[f64], x: &[f64], y: usize, w: f64, g: &mut [f64]) {
    let width = x.len() + 1;
    for (k, pk) in p.iter().enumerate() {
        let r = w * (pk - if k == y { 1.0 } else { 0.0 });
        let row = &mut g[k * width..(k + 1) * width];
        row[0] += r;
        for (gj, xj) in row[1..].iter_mut().zip(x) {
            *gj += r * xj;
        }
    }
}

/// `H += w · (diag p − p pᵀ) ⊗ (1, x)(1, x)ᵀ`. `h` must start symmetric.
pub(super) fn add_hessian(c: usize, theta: &[f64], x: &[f64], w: f64, h: &mut DMatrix<f64>) {
    let p = probabilities(c, theta, x);
    add_hessian_from_probs(&p, x, w, h);
    symmetrize_lower(h, c, x.len() + 1);
}

fn add_hessian_from_probs(p: &[f64], x: &[f64], w: f64, h: &mut DMatrix<f64>) {
    let width = x.len() + 1;
    let z = |j: usize| if j == 0 { 1.0 } else { x[j - 1] };
    for (a, pa) in p.iter().enumerate() {
        for (b, pb) in p.iter().enumerate().take(a + 1) {
            let s = w * (if a == b { *pa } else { 0.0 } - pa * pb);
            if s == 0.0 {
                continue;
            }
            for i in 0..width {
                let si = s * z(i);
                for j in 0..width {
                    h[(a * width + i, b * width + j)] += si * z(j);
                }
            }
        }
    }
}

fn symmetrize_lower(h: &mut DMatrix<f64>, c: usize, width: usize) {
    for a in 0..c {
        for b in 0..a {
            for i in 0..width {
                for j in 0..width {
                    h[(b * width + j, a * width + i)] = h[(a * width + i, b * width + j)];
                }
            }
        }
    }
}

struct Objective<'p, 'a> {
    problem: &'p WeightedProblem<'a>,
    c: usize,
    ridge: f64,
    inv_total: f64,
}

impl Objective<'_, '_> {
    fn labels(y: &Outcomes) -> &[usize] {
        match y {
            Outcomes::Class { labels, .. } => labels,
            _ => unreachable!("outcome variant checked by WeightedProblem"),
        }
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let mut f = 0.0;
        for b in self.problem.blocks() {
            let labels = Self::labels(b.y);
            for (i, &y) in labels.iter().enumerate() {
                if b.w[i] > 0.0 {
                    f += b.w[i] * cross_entropy(self.c, theta, b.x.row(i), y);
                }
            }
        }
        f * self.inv_total + 0.5 * self.ridge * theta.iter().map(|t| t * t).sum::<f64>()
    }

    fn gradient_and_hessian(&self, theta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let d = theta.len();
        let width = d / self.c;
        let mut g = vec![0.0; d];
        let mut h = DMatrix::zeros(d, d);
        let mut p = vec![0.0; self.c];
        for b in self.problem.blocks() {
            let labels = Self::labels(b.y);
            for (i, &y) in labels.iter().enumerate() {
                let w = b.w[i] * self.inv_total;
                if w == 0.0 {
                    continue;
                }
                let x = b.x.row(i);
                logits(self.c, theta, x, &mut p);
                softmax_in_place(&mut p);
                add_score_from_probs(&p, x, y, w, &mut g);
                add_hessian_from_probs(&p, x, w, &mut h);
            }
        }
        symmetrize_lower(&mut h, self.c, width);
        for j in 0..d {
            g[j] += self.ridge * theta[j];
            h[(j, j)] += self.ridge;
        }
        (DVector::from_vec(g), h)
    }
}

/// Damped Newton iteration on the normalized, ridge-penalized objective until
/// the gradient norm reaches [`LOGISTIC_GRAD_TOL`].
pub(super) fn solve(problem: &WeightedProblem<'_>, c: usize, ridge: f64) -> Result<Theta> {
    let d = c * (problem.d_x() + 1);
    let obj = Objective {
        problem,
        c,
        ridge: ridge.max(MIN_RIDGE),
        inv_total: 1.0 / problem.total_weight(),
    };
    let mut theta = vec![0.0; d];
    let mut f = obj.value(&theta);
    let mut gnorm = f64::INFINITY;
    for _ in 0..LOGISTIC_MAX_ITER {
        let (g, h) = obj.gradient_and_hessian(&theta);
        gnorm = g.norm();
        if gnorm <= LOGISTIC_GRAD_TOL {
            return Ok(Theta(theta));
        }
        let step = linalg::solve_spd(h, &g, "logistic Hessian")?;
        let slope = -g.dot(&step);
        if -slope <= 64.0 * f64::EPSILON * (1.0 + f.abs()) {
            // the objective can no longer resolve the predicted decrease, so a
            // line search would stall; the full Newton step is safe this close
            for j in 0..d {
                theta[j] -= step[j];
            }
            f = obj.value(&theta);
            continue;
        }
        let mut t = 1.0;
        let mut accepted = false;
        let mut trial = vec![0.0; d];
        for _ in 0..60 {
            for j in 0..d {
                trial[j] = theta[j] - t * step[j];
            }
            let ft = obj.value(&trial);
            if ft <= f + 1e-4 * t * slope {
                theta.copy_from_slice(&trial);
                f = ft;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no decrease is representable any more; accept if the full Newton
            // decrement says we are at the optimum to working precision
            if -slope <= 1e-20 {
                return Ok(Theta(theta));
            }
            return Err(Error::Convergence {
                iterations: LOGISTIC_MAX_ITER,
                grad_norm: gnorm,
            });
        }
    }
    let (g, _) = obj.gradient_and_hessian(&theta);
    let final_norm = g.norm();
    if final_norm <= LOGISTIC_GRAD_TOL {
        return Ok(Theta(theta));
    }
    Err(Error::Convergence {
        iterations: LOGISTIC_MAX_ITER,
        grad_norm: final_norm.min(gnorm),
    })
}
