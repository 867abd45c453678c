//! One-hidden-layer ReLU network with softmax output, trained by full-batch Adam.
//!
//! Parameter layout (flattened in this order):
//! `W1` (`hidden × d_x`, row-major), `b1` (`hidden`), `W2` (`C × hidden`,
//! row-major), `b2` (`C`).

use rand::Rng;

use super::logistic::softmax_in_place;
use super::{Theta, WeightedProblem};
use crate::error::{Error, Result};
use crate::measures::Outcomes;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden: usize,
    pub num_classes: usize,
    pub epochs: usize,
    pub step: f64,
    pub adam_betas: (f64, f64),
    pub seed: u64,
}

impl MlpConfig {
    pub const ADAM_EPS: f64 = 1e-8;

    pub fn new(hidden: usize, num_classes: usize) -> Self {
        Self {
            hidden,
            num_classes,
            epochs: 200,
            step: 1e-2,
            adam_betas: (0.9, 0.999),
            seed: 0,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::param("hidden layer must have at least one unit"));
        }
        if self.num_classes < 2 {
            return Err(Error::param("MLP needs at least two classes"));
        }
        if !(self.step > 0.0) {
            return Err(Error::param("Adam step must be positive"));
        }
        let (b1, b2) = self.adam_betas;
        if !(0.0..1.0).contains(&b1) || !(0.0..1.0).contains(&b2) {
            return Err(Error::param("Adam betas must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn dim(&self, d_x: usize) -> usize {
        self.hidden * d_x + self.hidden + self.num_classes * self.hidden + self.num_classes
    }
}

pub(crate) struct Network<'t> {
    d: usize,
    h: usize,
    c: usize,
    w1: &'t [f64],
    b1: &'t [f64],
    w2: &'t [f64],
    b2: &'t [f64],
}

impl<'t> Network<'t> {
    pub(crate) fn new(cfg: &MlpConfig, d: usize, theta: &'t [f64]) -> Self {
        let (h, c) = (cfg.hidden, cfg.num_classes);
        let (w1, rest) = theta.split_at(h * d);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(c * h);
        Self {
            d,
            h,
            c,
            w1,
            b1,
            w2,
            b2,
        }
    }

    /// Pre-activations, hidden activations and output probabilities.
    fn forward(&self, x: &[f64], pre: &mut [f64], act: &mut [f64], out: &mut [f64]) {
        for j in 0..self.h {
            let row = &self.w1[j * self.d..(j + 1) * self.d];
            pre[j] = self.b1[j] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            act[j] = pre[j].max(0.0);
        }
        for k in 0..self.c {
            let row = &self.w2[k * self.h..(k + 1) * self.h];
            out[k] = self.b2[k] + row.iter().zip(act.iter()).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub(crate) fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let (mut pre, mut act, mut out) = (vec![0.0; self.h], vec![0.0; self.h], vec![0.0; self.c]);
        self.forward(x, &mut pre, &mut act, &mut out);
        softmax_in_place(&mut out);
        out
    }

    pub(crate) fn cross_entropy(&self, x: &[f64], y: usize) -> f64 {
        let (mut pre, mut act, mut out) = (vec![0.0; self.h], vec![0.0; self.h], vec![0.0; self.c]);
        self.forward(x, &mut pre, &mut act, &mut out);
        let m = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + out.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - out[y]
    }

    /// `grad += w · ∇_θ ℓ(x, y)`; returns the loss at `(x, y)`.
    pub(crate) fn add_gradient(&self, x: &[f64], y: usize, w: f64, grad: &mut [f64]) -> f64 {
        let mut scratch = Scratch::new(self.h, self.c);
        self.add_gradient_with(x, y, w, grad, &mut scratch)
    }

    fn add_gradient_with(
        &self,
        x: &[f64],
        y: usize,
        w: f64,
        grad: &mut [f64],
        s: &mut Scratch,
    ) -> f64 {
        let (d, h, c) = (self.d, self.h, self.c);
        self.forward(x, &mut s.pre, &mut s.act, &mut s.out);
        let m = s.out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + s.out.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let loss = lse - s.out[y];
        softmax_in_place(&mut s.out);
        s.out[y] -= 1.0;

        let (g_w1, rest) = grad.split_at_mut(h * d);
        let (g_b1, rest) = rest.split_at_mut(h);
        let (g_w2, g_b2) = rest.split_at_mut(c * h);
        s.back.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..c {
            let dk = w * s.out[k];
            g_b2[k] += dk;
            let row = &mut g_w2[k * h..(k + 1) * h];
            let w2row = &self.w2[k * h..(k + 1) * h];
            for j in 0..h {
                row[j] += dk * s.act[j];
                s.back[j] += dk * w2row[j];
            }
        }
        for j in 0..h {
            if s.pre[j] <= 0.0 {
                continue;
            }
            let dj = s.back[j];
            g_b1[j] += dj;
            for (g, xi) in g_w1[j * d..(j + 1) * d].iter_mut().zip(x) {
                *g += dj * xi;
            }
        }
        loss
    }
}

struct Scratch {
    pre: Vec<f64>,
    act: Vec<f64>,
    out: Vec<f64>,
    back: Vec<f64>,
}

impl Scratch {
    fn new(h: usize, c: usize) -> Self {
        Self {
            pre: vec![0.0; h],
            act: vec![0.0; h],
            out: vec![0.0; c],
            back: vec![0.0; h],
        }
    }
}

/// Uniform `±1/√fan_in` initialization for every layer, biases included.
pub(crate) fn initialize(cfg: &MlpConfig, d: usize, rng: SeededRng) -> Vec<f64> {
    let mut g = SeededRng::new(cfg.seed ^ rng.seed, rng.stream_id).generator();
    let mut theta = Vec::with_capacity(cfg.dim(d));
    let b_in = 1.0 / (d.max(1) as f64).sqrt();
    let b_hidden = 1.0 / (cfg.hidden as f64).sqrt();
    let mut fill = |count: usize, bound: f64, theta: &mut Vec<f64>| {
        for _ in 0..count {
            theta.push(g.random_range(-bound..bound));
        }
    };
    fill(cfg.hidden * d + cfg.hidden, b_in, &mut theta);
    fill(
        cfg.num_classes * cfg.hidden + cfg.num_classes,
        b_hidden,
        &mut theta,
    );
    theta
}

/// Full-batch Adam on the weight-normalized cross-entropy. Returns the final
/// iterate, an approximate stationary point of the non-convex objective.
pub(crate) fn train(problem: &WeightedProblem<'_>, cfg: &MlpConfig, rng: SeededRng) -> Theta {
    train_traced(problem, cfg, rng).0
}

/// As [`train`], also returning the objective before each epoch's update.
pub(crate) fn train_traced(
    problem: &WeightedProblem<'_>,
    cfg: &MlpConfig,
    rng: SeededRng,
) -> (Theta, Vec<f64>) {
    let d = problem.d_x();
    let mut theta = initialize(cfg, d, rng);
    let dim = theta.len();
    let inv_total = 1.0 / problem.total_weight();
    let (beta1, beta2) = cfg.adam_betas;
    let mut m = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut scratch = Scratch::new(cfg.hidden, cfg.num_classes);
    for epoch in 1..=cfg.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        {
            let net = Network::new(cfg, d, &theta);
            for b in problem.blocks() {
                let Outcomes::Class { labels, .. } = b.y else {
                    unreachable!("outcome variant checked by WeightedProblem")
                };
                for (i, &y) in labels.iter().enumerate() {
                    let w = b.w[i] * inv_total;
                    if w > 0.0 {
                        loss +=
                            w * net.add_gradient_with(b.x.row(i), y, w, &mut grad, &mut scratch);
                    }
                }
            }
        }
        trace.push(loss);
        let c1 = 1.0 - beta1.powi(epoch as i32);
        let c2 = 1.0 - beta2.powi(epoch as i32);
        for j in 0..dim {
            m[j] = beta1 * m[j] + (1.0 - beta1) * grad[j];
            v[j] = beta2 * v[j] + (1.0 - beta2) * grad[j] * grad[j];
            let mh = m[j] / c1;
            let vh = v[j] / c2;
            theta[j] -= cfg.step * mh / (vh.sqrt() + MlpConfig::ADAM_EPS);
        }
    }
    (Theta(theta), trace)
}
