//! Scaled conjugate gradient, Møller's formulation: conjugate directions
//! with a scalar Levenberg-style regularization of the curvature estimate
//! instead of a line search. σ = 1e-5, initial λ = 1e-6.

use super::{axpy, dot, Progress, TrainerConfig, TrainReport, Workspace};
use crate::error::Result;

const SIGMA: f64 = 1e-5;
const LAMBDA_INIT: f64 = 1e-6;

pub(crate) fn run(
    ws: &mut Workspace,
    mut params: Vec<f64>,
    initial: f64,
    cfg: &TrainerConfig,
) -> Result<TrainReport> {
    let n = params.len();
    let mut progress = Progress::new(initial, cfg.tolerance);
    let mut lambda = LAMBDA_INIT;
    let mut lambda_bar = 0.0;
    let mut converged = false;

    let grad = ws.grad_at(&params);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(ws.diverged(&params, progress.into_curve()));
    }
    let mut r: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut p = r.clone();
    let mut success = true;
    let mut delta = 0.0;
    let mut accepted_steps = 0usize;

    for _ in 0..cfg.epochs {
        let p_norm2 = dot(&p, &p);
        if p_norm2 == 0.0 {
            converged = true;
            break;
        }

        if success {
            // Second-order information from a forward difference of the
            // gradient along p.
            let sigma_k = SIGMA / p_norm2.sqrt();
            let shifted = axpy(&params, sigma_k, &p);
            let grad_shifted = ws.grad_at(&shifted);
            if grad_shifted.iter().any(|g| !g.is_finite()) {
                return Err(ws.diverged(&params, progress.into_curve()));
            }
            // current gradient is -r
            let hessian_p: Vec<f64> = grad_shifted
                .iter()
                .zip(&r)
                .map(|(gs, ri)| (gs + ri) / sigma_k)
                .collect();
            delta = dot(&p, &hessian_p);
        }

        delta += (lambda - lambda_bar) * p_norm2;
        if delta <= 0.0 {
            // Make the curvature estimate positive definite.
            lambda_bar = 2.0 * (lambda - delta / p_norm2);
            delta = -delta + lambda * p_norm2;
            lambda = lambda_bar;
        }

        let mu = dot(&p, &r);
        if mu <= 0.0 {
            // p stopped being a descent direction: restart along -gradient.
            p = r.clone();
            success = true;
            continue;
        }

        let alpha = mu / delta;
        let trial = axpy(&params, alpha, &p);
        let trial_loss = ws.loss_at(&trial);
        // Comparison parameter: actual vs predicted reduction.
        let comparison = if trial_loss.is_finite() {
            2.0 * delta * (progress.last() - trial_loss) / (mu * mu)
        } else {
            -1.0
        };

        if comparison >= 0.0 {
            params = trial;
            let grad_new = ws.grad_at(&params);
            if grad_new.iter().any(|g| !g.is_finite()) {
                return Err(ws.diverged(&params, progress.into_curve()));
            }
            let r_new: Vec<f64> = grad_new.iter().map(|g| -g).collect();
            lambda_bar = 0.0;
            success = true;
            accepted_steps += 1;
            if accepted_steps % n == 0 {
                p = r_new.clone();
            } else {
                let beta = (dot(&r_new, &r_new) - dot(&r_new, &r)) / mu;
                p = r_new.iter().zip(&p).map(|(rn, pi)| rn + beta * pi).collect();
            }
            r = r_new;
            if comparison >= 0.75 {
                lambda *= 0.25;
            }
            if progress.accept(trial_loss) {
                converged = true;
                break;
            }
        } else {
            lambda_bar = lambda;
            success = false;
        }

        if comparison < 0.25 {
            lambda += delta * (1.0 - comparison) / p_norm2;
        }
    }

    Ok(ws.report(&params, progress.into_curve(), converged))
}
