//! Hybrid learning for Takagi-Sugeno systems: per epoch, a batch
//! least-squares solve for the consequent coefficients with membership
//! functions fixed, then one gradient step on the antecedent parameters
//! with consequents fixed.

use crate::data::Dataset;
use crate::error::Result;
use crate::fuzzy::{
    mf_param_grad, normalize_firing, FisKind, FuzzySystem, RuleConsequent, TNorm,
};
use crate::numeric::{solve_least_squares, Matrix};

use super::{check_shapes, fis_sse, NFTrainConfig, NFTrainReport};

pub fn hybrid_train_ts(
    fs: &FuzzySystem,
    ds: &Dataset,
    cfg: &NFTrainConfig,
) -> Result<NFTrainReport> {
    cfg.validate()?;
    check_shapes(fs, ds)?;
    if fs.kind != FisKind::TakagiSugeno {
        return Err(crate::error::Error::InvalidInput(
            "hybrid_train_ts needs a takagi-sugeno system".into(),
        ));
    }

    let mut current = fs.clone();
    let initial = fis_sse(&current, ds)?;
    if !initial.is_finite() {
        return Ok(NFTrainReport {
            system: current,
            loss_curve: Vec::new(),
            diverged: true,
        });
    }
    let mut curve = vec![initial];
    let mut loss = initial;

    for _ in 0..cfg.epochs {
        // Pass 1: least-squares estimate of all consequents. The design
        // matrix row for a sample is the per-rule blocks w̄ᵢ·(x, 1), which
        // makes inference exactly linear in the consequent vector.
        if let Some(candidate) = lse_consequents(&current, ds, cfg.ridge) {
            let cand_loss = fis_sse(&candidate, ds)?;
            if cand_loss.is_finite() && cand_loss <= loss {
                current = candidate;
                loss = cand_loss;
            }
        }

        // Pass 2: one gradient step on the antecedent MF parameters,
        // halved until it stops hurting.
        if !cfg.freeze_antecedents {
            let grad = antecedent_gradient(&current, ds)?;
            if grad.iter().all(|g| g.is_finite()) {
                let params = current.antecedent_params();
                let mut step = cfg.antecedent_lr;
                for _ in 0..=10 {
                    let trial: Vec<f64> = params
                        .iter()
                        .zip(&grad)
                        .map(|(p, g)| p - step * g)
                        .collect();
                    // Shape-invariant violations reject the trial the same
                    // way a loss increase does.
                    if let Ok(cand) = current.with_antecedent_params(&trial) {
                        let cand_loss = fis_sse(&cand, ds)?;
                        if cand_loss.is_finite() && cand_loss <= loss {
                            current = cand;
                            loss = cand_loss;
                            break;
                        }
                    }
                    step *= 0.5;
                }
            }
        }

        curve.push(loss);
    }

    Ok(NFTrainReport {
        system: current,
        loss_curve: curve,
        diverged: false,
    })
}

/// Solve for all consequents at once; None when the solve fails.
fn lse_consequents(fs: &FuzzySystem, ds: &Dataset, ridge: f64) -> Option<FuzzySystem> {
    let d = fs.inputs.len();
    let block = d + 1;
    let n_rules = fs.rules.len();
    let mut a = Matrix::zeros(ds.len(), n_rules * block);
    let mut b = Vec::with_capacity(ds.len());
    for i in 0..ds.len() {
        let x = ds.inputs.row(i);
        let w = fs.firing_strengths(x).ok()?;
        let (wn, _) = normalize_firing(&w);
        let row = a.row_mut(i);
        for (ri, wi) in wn.iter().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                row[ri * block + j] = wi * xj;
            }
            row[ri * block + d] = *wi;
        }
        b.push(ds.targets.get(i, 0));
    }
    let sol = solve_least_squares(&a, &b, ridge).ok()?;
    if sol.x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut out = fs.clone();
    for (ri, rule) in out.rules.iter_mut().enumerate() {
        rule.consequent = RuleConsequent::Linear {
            coeffs: sol.x[ri * block..ri * block + d].to_vec(),
            offset: sol.x[ri * block + d],
        };
    }
    Some(out)
}

/// Analytic gradient of the sse with respect to the antecedent MF
/// parameters, consequents fixed. Ties under the min T-norm and
/// piecewise-linear kinks take subgradient 0; zero-activation samples
/// contribute nothing (their output does not depend on the MFs).
pub fn antecedent_gradient(fs: &FuzzySystem, ds: &Dataset) -> Result<Vec<f64>> {
    // Parameter offset of each (variable, term).
    let mut offsets = Vec::with_capacity(fs.inputs.len());
    let mut total = 0;
    for v in &fs.inputs {
        let mut per_term = Vec::with_capacity(v.terms.len());
        for t in &v.terms {
            per_term.push(total);
            total += t.param_count();
        }
        offsets.push(per_term);
    }
    let mut grad = vec![0.0; total];

    for i in 0..ds.len() {
        let x = ds.inputs.row(i);
        let w = fs.firing_strengths(x)?;
        let total_w: f64 = w.iter().sum();
        if total_w == 0.0 {
            continue;
        }
        let f: Vec<f64> = fs
            .rules
            .iter()
            .map(|r| match &r.consequent {
                RuleConsequent::Linear { coeffs, offset } => {
                    coeffs.iter().zip(x).map(|(c, xi)| c * xi).sum::<f64>() + offset
                }
                RuleConsequent::OutputTerm(_) => unreachable!("validated TS system"),
            })
            .collect();
        let y: f64 = w.iter().zip(&f).map(|(wi, fi)| wi * fi).sum::<f64>() / total_w;
        let err2 = 2.0 * (y - ds.targets.get(i, 0));

        for (ri, rule) in fs.rules.iter().enumerate() {
            let dy_dw = (f[ri] - y) / total_w;
            let slots: Vec<(usize, usize, f64)> = rule
                .antecedent
                .iter()
                .enumerate()
                .filter_map(|(vi, s)| {
                    s.map(|ti| {
                        (
                            vi,
                            ti,
                            crate::fuzzy::mf_eval(&fs.inputs[vi].terms[ti], x[vi]),
                        )
                    })
                })
                .collect();
            if slots.is_empty() {
                continue;
            }
            for (k, &(vi, ti, mu)) in slots.iter().enumerate() {
                let dw_dmu = match fs.tnorm {
                    TNorm::Product => {
                        let others: f64 = slots
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| *j != k)
                            .map(|(_, &(_, _, m))| m)
                            .product();
                        rule.weight * others
                    }
                    TNorm::Min => {
                        let min = slots
                            .iter()
                            .map(|&(_, _, m)| m)
                            .fold(f64::INFINITY, f64::min);
                        let ties = slots.iter().filter(|&&(_, _, m)| m == min).count();
                        if mu == min && ties == 1 {
                            rule.weight
                        } else {
                            0.0
                        }
                    }
                };
                if dw_dmu == 0.0 {
                    continue;
                }
                let scale = err2 * dy_dw * dw_dmu;
                let mf = &fs.inputs[vi].terms[ti];
                for (pi, dmu) in mf_param_grad(mf, x[vi]).iter().enumerate() {
                    grad[offsets[vi][ti] + pi] += scale * dmu;
                }
            }
        }
    }
    Ok(grad)
}
