//! Levenberg-Marquardt: damped Gauss-Newton steps (JᵀJ + λI)δ = −Jᵀr.
//!
//! The step solve reuses the ridge least-squares routine, which minimizes
//! ‖Jδ + r‖² + λ‖δ‖², the same normal equations. Accepted steps divide λ by
//! `lm_factor`, rejected ones multiply it; λ past 1e8 is a divergence.

use super::{axpy, Progress, TrainerConfig, TrainReport, Workspace};
use crate::error::Result;
use crate::numeric::solve_least_squares;

const LAMBDA_MAX: f64 = 1e8;
const LAMBDA_MIN: f64 = 1e-12;

pub(crate) fn run(
    ws: &mut Workspace,
    mut params: Vec<f64>,
    initial: f64,
    cfg: &TrainerConfig,
) -> Result<TrainReport> {
    let mut progress = Progress::new(initial, cfg.tolerance);
    let mut lambda = cfg.lm_lambda0;
    let mut converged = false;

    for _ in 0..cfg.epochs {
        let (jac, residuals) = ws.jacobian_at(&params);
        if !jac.is_finite() || residuals.iter().any(|r| !r.is_finite()) {
            return Err(ws.diverged(&params, progress.into_curve()));
        }
        let neg_r: Vec<f64> = residuals.iter().map(|r| -r).collect();

        // Escalate damping until a step is accepted.
        loop {
            let accepted = match solve_least_squares(&jac, &neg_r, lambda) {
                Ok(sol) => {
                    let trial = axpy(&params, 1.0, &sol.x);
                    let loss = ws.loss_at(&trial);
                    if loss.is_finite() && loss <= progress.last() {
                        params = trial;
                        lambda = (lambda / cfg.lm_factor).max(LAMBDA_MIN);
                        if progress.accept(loss) {
                            converged = true;
                        }
                        true
                    } else {
                        false
                    }
                }
                Err(_) => false,
            };
            if accepted {
                break;
            }
            lambda *= cfg.lm_factor;
            if lambda > LAMBDA_MAX {
                return Err(ws.diverged(&params, progress.into_curve()));
            }
        }
        if converged {
            break;
        }
    }

    Ok(ws.report(&params, progress.into_curve(), converged))
}
