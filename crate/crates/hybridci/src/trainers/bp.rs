//! Full-batch gradient descent with momentum.
//!
//! Safeguard: a candidate update that increases the loss is halved and
//! retried up to 10 times; if every scale fails the run stops.

use super::{axpy, Progress, TrainerConfig, TrainReport, Workspace};
use crate::error::Result;

pub(crate) fn run(
    ws: &mut Workspace,
    mut params: Vec<f64>,
    initial: f64,
    cfg: &TrainerConfig,
) -> Result<TrainReport> {
    let mut progress = Progress::new(initial, cfg.tolerance);
    let mut velocity = vec![0.0; params.len()];
    let mut converged = false;

    for _ in 0..cfg.epochs {
        let grad = ws.grad_at(&params);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(ws.diverged(&params, progress.into_curve()));
        }
        let candidate: Vec<f64> = velocity
            .iter()
            .zip(&grad)
            .map(|(v, g)| cfg.momentum * v - cfg.learning_rate * g)
            .collect();

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=10 {
            let trial = axpy(&params, scale, &candidate);
            let loss = ws.loss_at(&trial);
            if loss.is_finite() && loss <= progress.last() {
                params = trial;
                velocity = candidate.iter().map(|v| scale * v).collect();
                accepted = true;
                if progress.accept(loss) {
                    converged = true;
                }
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            // No scale improves the loss: nothing left to gain here.
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    Ok(ws.report(&params, progress.into_curve(), converged))
}
