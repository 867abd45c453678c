use nalgebra::{DMatrix, DVector};

use super::{design_at, Theta, WeightedProblem};
use crate::error::Result;
use crate::linalg;

/// Weighted normal equations `(ZᵀWZ) θ = ZᵀWy`.
pub(super) fn solve(problem: &WeightedProblem<'_>, intercept: bool) -> Result<Theta> {
    let d = problem.d_x() + usize::from(intercept);
    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    let mut z = vec![0.0; d];
    for b in problem.blocks() {
        let y = b.y.as_real()?;
        for i in 0..y.len() {
            let x = b.x.row(i);
            let w = b.w[i];
            for (j, zj) in z.iter_mut().enumerate() {
                *zj = design_at(intercept, x, j);
            }
            for j in 0..d {
                let wz = w * z[j];
                rhs[j] += wz * y[i];
                for k in 0..=j {
                    gram[(j, k)] += wz * z[k];
                }
            }
        }
    }
    for j in 0..d {
        for k in 0..j {
            gram[(k, j)] = gram[(j, k)];
        }
    }
    let theta = linalg::solve_spd(gram, &rhs, "weighted Gram matrix ZᵀWZ")?;
    Ok(Theta(theta.iter().copied().collect()))
}
