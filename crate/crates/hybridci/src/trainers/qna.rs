//! Quasi-Newton training: BFGS on the inverse Hessian with Armijo
//! backtracking (c = 1e-4, shrink 0.5).

use super::{axpy, dot, Progress, TrainerConfig, TrainReport, Workspace};
use crate::error::Result;
use crate::numeric::Matrix;

const ARMIJO_C: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 40;

pub(crate) fn run(
    ws: &mut Workspace,
    mut params: Vec<f64>,
    initial: f64,
    cfg: &TrainerConfig,
) -> Result<TrainReport> {
    let n = params.len();
    let mut progress = Progress::new(initial, cfg.tolerance);
    let mut h = Matrix::identity(n);
    let mut converged = false;

    let mut grad = ws.grad_at(&params);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(ws.diverged(&params, progress.into_curve()));
    }

    for _ in 0..cfg.epochs {
        let mut direction: Vec<f64> = h.matvec(&grad).expect("square").iter().map(|v| -v).collect();
        let mut slope = dot(&grad, &direction);
        if slope > 0.0 {
            // Curvature estimate lost positive definiteness; restart from
            // steepest descent.
            h = Matrix::identity(n);
            direction = grad.iter().map(|g| -g).collect();
            slope = -dot(&grad, &grad);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = axpy(&params, step, &direction);
            let loss = ws.loss_at(&trial);
            if loss.is_finite() && loss <= progress.last() + ARMIJO_C * step * slope {
                accepted = Some((trial, loss, step));
                break;
            }
            step *= SHRINK;
        }
        let Some((trial, loss, step)) = accepted else {
            // Even a microscopic step fails Armijo: stop here.
            converged = true;
            break;
        };

        let grad_new = ws.grad_at(&trial);
        if grad_new.iter().any(|g| !g.is_finite()) {
            params = trial;
            return Err(ws.diverged(&params, progress.into_curve()));
        }
        let s: Vec<f64> = direction.iter().map(|d| step * d).collect();
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            bfgs_update(&mut h, &s, &y, sy);
        } else {
            h = Matrix::identity(n);
        }

        params = trial;
        grad = grad_new;
        if progress.accept(loss) {
            converged = true;
            break;
        }
    }

    Ok(ws.report(&params, progress.into_curve(), converged))
}

/// H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ, expanded to avoid temporaries:
/// H − ρ(s·(Hy)ᵀ + (Hy)·sᵀ) + (ρ² yᵀHy + ρ)·ssᵀ.
fn bfgs_update(h: &mut Matrix, s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy = h.matvec(y).expect("square");
    let yhy = dot(y, &hy);
    let coeff = rho * rho * yhy + rho;
    for i in 0..n {
        for j in 0..n {
            let v = h.get(i, j) - rho * (s[i] * hy[j] + hy[i] * s[j]) + coeff * s[i] * s[j];
            h.set(i, j, v);
        }
    }
}
