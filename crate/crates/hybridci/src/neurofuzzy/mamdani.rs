//! Gradient tuning of Mamdani membership functions.
//!
//! The defuzzified output is not smoothly differentiable through the
//! discrete aggregation grid, so the gradient is numeric (central
//! differences) rather than analytic. Training therefore requires gaussian
//! membership functions, whose parameters move without ordering
//! constraints, and targets the centroid-defuzzified output.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fuzzy::{Defuzz, FisKind, FuzzySystem, MfKind, DEFAULT_RESOLUTION};
use crate::numeric::finite_diff_gradient;

use super::{check_shapes, NFTrainConfig, NFTrainReport};

const FD_STEP: f64 = 1e-6;

pub fn gradient_train_mamdani(
    fs: &FuzzySystem,
    ds: &Dataset,
    cfg: &NFTrainConfig,
) -> Result<NFTrainReport> {
    cfg.validate()?;
    check_shapes(fs, ds)?;
    if fs.kind != FisKind::Mamdani {
        return Err(Error::InvalidInput(
            "gradient_train_mamdani needs a mamdani system".into(),
        ));
    }
    let all_gaussian = fs
        .inputs
        .iter()
        .chain(fs.output.iter())
        .flat_map(|v| v.terms.iter())
        .all(|t| matches!(t.kind, MfKind::Gaussian { .. }));
    if !all_gaussian {
        return Err(Error::InvalidInput(
            "gradient_train_mamdani needs gaussian membership functions".into(),
        ));
    }

    let mut current = fs.clone();
    let initial = centroid_sse(&current, ds)?;
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
        let params = current.all_mf_params();
        let grad = match finite_diff_gradient(
            |p| match current.with_all_mf_params(p) {
                Ok(cand) => centroid_sse(&cand, ds).unwrap_or(f64::INFINITY),
                // Probe pushed a sigma past zero; mirror the objective so
                // the difference quotient stays defined.
                Err(_) => f64::INFINITY,
            },
            &params,
            FD_STEP,
        ) {
            Ok(g) => g,
            Err(_) => break,
        };

        let mut step = cfg.antecedent_lr;
        for _ in 0..=10 {
            let trial: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - step * g).collect();
            if let Ok(cand) = current.with_all_mf_params(&trial) {
                let cand_loss = centroid_sse(&cand, ds)?;
                if cand_loss.is_finite() && cand_loss <= loss {
                    current = cand;
                    loss = cand_loss;
                    break;
                }
            }
            step *= 0.5;
        }
        curve.push(loss);
    }

    Ok(NFTrainReport {
        system: current,
        loss_curve: curve,
        diverged: false,
    })
}

/// Training objective: sse of the centroid-defuzzified output, whatever
/// defuzzifier the system itself is configured with.
fn centroid_sse(fs: &FuzzySystem, ds: &Dataset) -> Result<f64> {
    let eval = if fs.defuzz == Defuzz::Centroid {
        None
    } else {
        let mut c = fs.clone();
        c.defuzz = Defuzz::Centroid;
        Some(c)
    };
    let fs = eval.as_ref().unwrap_or(fs);
    let mut sse = 0.0;
    for i in 0..ds.len() {
        let y = fs.infer_mamdani(ds.inputs.row(i), DEFAULT_RESOLUTION)?.value;
        let e = y - ds.targets.get(i, 0);
        sse += e * e;
    }
    Ok(sse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{
        FuzzyRule, FuzzyVariable, MembershipFn, RuleConsequent, TConorm, TNorm,
    };
    use crate::numeric::Matrix;

    fn gauss(center: f64, sigma: f64, label: &str) -> MembershipFn {
        MembershipFn::new(MfKind::Gaussian { center, sigma }, label).unwrap()
    }

    fn step_system() -> FuzzySystem {
        FuzzySystem {
            kind: FisKind::Mamdani,
            inputs: vec![FuzzyVariable::new(
                "x",
                (0.0, 1.0),
                vec![gauss(0.2, 0.2, "low"), gauss(0.8, 0.2, "high")],
            )
            .unwrap()],
            output: Some(
                FuzzyVariable::new(
                    "y",
                    (0.0, 1.0),
                    vec![gauss(0.3, 0.15, "small"), gauss(0.7, 0.15, "big")],
                )
                .unwrap(),
            ),
            rules: vec![
                FuzzyRule {
                    antecedent: vec![Some(0)],
                    consequent: RuleConsequent::OutputTerm(0),
                    weight: 1.0,
                },
                FuzzyRule {
                    antecedent: vec![Some(1)],
                    consequent: RuleConsequent::OutputTerm(1),
                    weight: 1.0,
                },
            ],
            tnorm: TNorm::Min,
            tconorm: TConorm::Max,
            defuzz: Defuzz::Centroid,
        }
    }

    fn step_dataset() -> Dataset {
        // Monotone step-like target: low for x < 0.5, high above.
        let points: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 19.0]).collect();
        let targets: Vec<Vec<f64>> = points
            .iter()
            .map(|x| vec![if x[0] < 0.5 { 0.1 } else { 0.9 }])
            .collect();
        Dataset::new(
            Matrix::from_rows(&points).unwrap(),
            Matrix::from_rows(&targets).unwrap(),
            "step",
        )
        .unwrap()
    }

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let fs = step_system();
        let cfg = NFTrainConfig {
            epochs: 3,
            antecedent_lr: 0.0,
            ..NFTrainConfig::default()
        };
        let report = gradient_train_mamdani(&fs, &step_dataset(), &cfg).unwrap();
        assert_eq!(report.system, fs);
        assert!(!report.diverged);
    }

    #[test]
    fn training_improves_step_fit() {
        let fs = step_system();
        let ds = step_dataset();
        let cfg = NFTrainConfig {
            epochs: 15,
            antecedent_lr: 0.02,
            ..NFTrainConfig::default()
        };
        let report = gradient_train_mamdani(&fs, &ds, &cfg).unwrap();
        assert!(!report.diverged);
        let first = report.loss_curve[0];
        let last = *report.loss_curve.last().unwrap();
        assert!(last < first, "no improvement: {:?}", report.loss_curve);
    }

    #[test]
    fn loss_curve_never_increases() {
        let fs = step_system();
        let cfg = NFTrainConfig {
            epochs: 12,
            antecedent_lr: 0.5,
            ..NFTrainConfig::default()
        };
        let report = gradient_train_mamdani(&fs, &step_dataset(), &cfg).unwrap();
        for w in report.loss_curve.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn non_gaussian_terms_are_rejected() {
        let mut fs = step_system();
        fs.inputs[0].terms[0] = MembershipFn::new(
            MfKind::Triangular {
                a: 0.0,
                b: 0.2,
                c: 0.5,
            },
            "low",
        )
        .unwrap();
        let err = gradient_train_mamdani(&fs, &step_dataset(), &NFTrainConfig::default());
        assert!(err.is_err());
    }

    #[test]
    fn ts_system_is_rejected() {
        let fs = FuzzySystem {
            kind: FisKind::TakagiSugeno,
            inputs: step_system().inputs,
            output: None,
            rules: vec![FuzzyRule {
                antecedent: vec![Some(0)],
                consequent: RuleConsequent::Linear {
                    coeffs: vec![1.0],
                    offset: 0.0,
                },
                weight: 1.0,
            }],
            tnorm: TNorm::Min,
            tconorm: TConorm::Max,
            defuzz: Defuzz::Centroid,
        };
        assert!(gradient_train_mamdani(&fs, &step_dataset(), &NFTrainConfig::default()).is_err());
    }
}
