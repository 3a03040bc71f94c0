//! Local-search weight optimizers: backpropagation, scaled conjugate
//! gradient, quasi-Newton (BFGS), and Levenberg-Marquardt.
//!
//! All four train full-batch on the sum-of-squares loss and guarantee a
//! non-increasing loss curve: an epoch either improves (or holds) the loss
//! or the run stops.

mod bp;
mod lm;
mod qna;
mod scg;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mlp::MLPNetwork;
use crate::numeric::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainAlgorithm {
    /// Gradient descent with momentum and a step-halving safeguard.
    BP,
    /// Scaled conjugate gradient, Møller's formulation (no line search).
    SCG,
    /// BFGS with Armijo backtracking line search.
    QNA,
    /// Levenberg-Marquardt damped Gauss-Newton.
    LM,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub algorithm: TrainAlgorithm,
    pub epochs: usize,
    /// BP step size.
    pub learning_rate: f64,
    /// BP momentum, in [0, 1).
    pub momentum: f64,
    /// LM initial damping.
    pub lm_lambda0: f64,
    /// LM damping multiplier, > 1.
    pub lm_factor: f64,
    /// Stop once the per-epoch loss improvement falls below this.
    pub tolerance: f64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            algorithm: TrainAlgorithm::BP,
            epochs: 100,
            learning_rate: 0.01,
            momentum: 0.0,
            lm_lambda0: 1e-3,
            lm_factor: 10.0,
            tolerance: 1e-9,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidInput("trainer: epochs must be >= 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidInput("trainer: learning_rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidInput("trainer: momentum must be in [0,1)".into()));
        }
        if !(self.lm_lambda0.is_finite() && self.lm_lambda0 > 0.0) {
            return Err(Error::InvalidInput("trainer: lm_lambda0 must be > 0".into()));
        }
        if !(self.lm_factor.is_finite() && self.lm_factor > 1.0) {
            return Err(Error::InvalidInput("trainer: lm_factor must be > 1".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(Error::InvalidInput("trainer: tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub final_net: MLPNetwork,
    /// Initial loss followed by the loss after each accepted epoch.
    pub loss_curve: Vec<f64>,
    pub epochs_run: usize,
    pub converged: bool,
}

/// Train a copy of `net` on `ds`. The input network is unchanged.
pub fn train(net: &MLPNetwork, ds: &Dataset, cfg: &TrainerConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if ds.input_width() != net.input_width() || ds.target_width() != net.output_width() {
        return Err(Error::InvalidInput(format!(
            "trainer: network {}->{} does not match dataset {}->{}",
            net.input_width(),
            net.output_width(),
            ds.input_width(),
            ds.target_width()
        )));
    }
    let mut ws = Workspace {
        net: net.clone(),
        ds,
    };
    let params = net.flatten();
    if params.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "trainer: starting network has non-finite weights".into(),
        ));
    }
    let initial = ws.loss_at(&params);
    if !initial.is_finite() {
        return Err(ws.diverged(&params, Vec::new()));
    }
    match cfg.algorithm {
        TrainAlgorithm::BP => bp::run(&mut ws, params, initial, cfg),
        TrainAlgorithm::SCG => scg::run(&mut ws, params, initial, cfg),
        TrainAlgorithm::QNA => qna::run(&mut ws, params, initial, cfg),
        TrainAlgorithm::LM => lm::run(&mut ws, params, initial, cfg),
    }
}

/// Mutable evaluation scratchpad shared by the algorithms. Parameters are
/// pushed into the network before each evaluation.
pub(crate) struct Workspace<'a> {
    net: MLPNetwork,
    ds: &'a Dataset,
}

impl Workspace<'_> {
    /// Loss at a candidate point; non-finite parameters report +inf so the
    /// caller rejects the step.
    pub(crate) fn loss_at(&mut self, params: &[f64]) -> f64 {
        if params.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        self.net.set_params(params).expect("validated params");
        self.net.loss(self.ds).expect("shapes checked in train")
    }

    /// Gradient at a point with finite parameters.
    pub(crate) fn grad_at(&mut self, params: &[f64]) -> Vec<f64> {
        self.net.set_params(params).expect("validated params");
        self.net.gradient(self.ds).expect("shapes checked in train")
    }

    pub(crate) fn jacobian_at(&mut self, params: &[f64]) -> (Matrix, Vec<f64>) {
        self.net.set_params(params).expect("validated params");
        self.net.jacobian(self.ds).expect("shapes checked in train")
    }

    pub(crate) fn network_at(&mut self, params: &[f64]) -> MLPNetwork {
        self.net.set_params(params).expect("validated params");
        self.net.clone()
    }

    /// Divergence error carrying the last finite state.
    pub(crate) fn diverged(&mut self, params: &[f64], loss_curve: Vec<f64>) -> Error {
        let epochs_run = loss_curve.len().saturating_sub(1);
        Error::TrainingDiverged(Box::new(TrainReport {
            final_net: self.network_at(params),
            loss_curve,
            epochs_run,
            converged: false,
        }))
    }

    pub(crate) fn report(
        &mut self,
        params: &[f64],
        loss_curve: Vec<f64>,
        converged: bool,
    ) -> TrainReport {
        let epochs_run = loss_curve.len() - 1;
        TrainReport {
            final_net: self.network_at(params),
            loss_curve,
            epochs_run,
            converged,
        }
    }
}

/// Accepted-epoch loss curve with the tolerance-based stop rule.
pub(crate) struct Progress {
    curve: Vec<f64>,
    tolerance: f64,
}

impl Progress {
    pub(crate) fn new(initial: f64, tolerance: f64) -> Self {
        Progress {
            curve: vec![initial],
            tolerance,
        }
    }

    pub(crate) fn last(&self) -> f64 {
        *self.curve.last().unwrap()
    }

    /// Record an accepted epoch; true means the improvement fell below
    /// tolerance and the caller should stop as converged.
    pub(crate) fn accept(&mut self, loss: f64) -> bool {
        let improvement = self.last() - loss;
        self.curve.push(loss);
        improvement < self.tolerance
    }

    pub(crate) fn into_curve(self) -> Vec<f64> {
        self.curve
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::Transfer;
    use crate::numeric::RngStream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const ALL: [TrainAlgorithm; 4] = [
        TrainAlgorithm::BP,
        TrainAlgorithm::SCG,
        TrainAlgorithm::QNA,
        TrainAlgorithm::LM,
    ];

    fn line_dataset() -> Dataset {
        // y = 2x + 1 on three points: unique linear-in-weights optimum.
        Dataset::new(
            Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap(),
            Matrix::from_rows(&[vec![1.0], vec![3.0], vec![5.0]]).unwrap(),
            "line",
        )
        .unwrap()
    }

    fn xor_dataset() -> Dataset {
        Dataset::new(
            Matrix::from_rows(&[
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
            ])
            .unwrap(),
            Matrix::from_rows(&[vec![0.0], vec![1.0], vec![1.0], vec![0.0]]).unwrap(),
            "xor",
        )
        .unwrap()
    }

    fn config_for(alg: TrainAlgorithm, epochs: usize) -> TrainerConfig {
        TrainerConfig {
            algorithm: alg,
            epochs,
            learning_rate: 0.05,
            momentum: 0.9,
            ..TrainerConfig::default()
        }
    }

    #[test]
    fn zero_residual_start_converges_immediately() {
        let ds = line_dataset();
        for alg in ALL {
            let mut net = MLPNetwork::new(&[1, 1], &[]).unwrap();
            net.set_params(&[2.0, 1.0]).unwrap();
            let report = train(&net, &ds, &config_for(alg, 50)).unwrap();
            assert!(report.converged, "{:?} did not converge", alg);
            assert!(
                report.loss_curve.iter().all(|&l| l == 0.0),
                "{:?} curve {:?}",
                alg,
                report.loss_curve
            );
            assert!(report.loss_curve.len() <= 2);
            assert_eq!(report.final_net.flatten(), vec![2.0, 1.0]);
        }
    }

    #[test]
    fn lm_solves_linear_problem_in_three_epochs() {
        // 1-parameter model y = w·x on points (1,2), (2,4): minimizer w = 2.
        let ds = Dataset::new(
            Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap(),
            Matrix::from_rows(&[vec![2.0], vec![4.0]]).unwrap(),
            "prop",
        )
        .unwrap();
        // Bias-free single weight is not expressible; use w and b, still
        // quadratic with unique optimum (2, 0).
        let mut net = MLPNetwork::new(&[1, 1], &[]).unwrap();
        net.set_params(&[0.0, 0.0]).unwrap();
        let cfg = TrainerConfig {
            algorithm: TrainAlgorithm::LM,
            epochs: 3,
            ..TrainerConfig::default()
        };
        let report = train(&net, &ds, &cfg).unwrap();
        let final_loss = *report.loss_curve.last().unwrap();
        assert!(
            final_loss < 1e-12,
            "LM final loss {} after curve {:?}",
            final_loss,
            report.loss_curve
        );
    }

    #[test]
    fn all_four_find_the_linear_minimizer() {
        let ds = line_dataset();
        let mut rng = RngStream::new(3, 0);
        let net = MLPNetwork::random(&[1, 1], &[], &mut rng, 0.5).unwrap();
        for alg in ALL {
            let cfg = TrainerConfig {
                algorithm: alg,
                epochs: 3000,
                learning_rate: 0.05,
                momentum: 0.0,
                tolerance: 1e-15,
                ..TrainerConfig::default()
            };
            let report = train(&net, &ds, &cfg).unwrap();
            let p = report.final_net.flatten();
            assert_relative_eq!(p[0], 2.0, epsilon = 1e-6);
            assert_relative_eq!(p[1], 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn lm_large_damping_steps_against_gradient() {
        let ds = xor_dataset();
        let mut rng = RngStream::new(7, 0);
        let net =
            MLPNetwork::random(&[2, 3, 1], &[Transfer::Tanh], &mut rng, 0.7).unwrap();
        let (jac, r) = net.jacobian(&ds).unwrap();
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let sol = crate::numeric::solve_least_squares(&jac, &neg_r, 1e6).unwrap();
        let grad = net.gradient(&ds).unwrap();
        assert!(dot(&sol.x, &grad) < 0.0);
    }

    #[test]
    fn deterministic_reports() {
        let ds = xor_dataset();
        let mut rng = RngStream::new(21, 0);
        let net = MLPNetwork::random(&[2, 2, 1], &[Transfer::Tanh], &mut rng, 0.5).unwrap();
        for alg in ALL {
            let cfg = config_for(alg, 40);
            let a = train(&net, &ds, &cfg).unwrap();
            let b = train(&net, &ds, &cfg).unwrap();
            assert_eq!(a, b, "{:?} not deterministic", alg);
        }
    }

    #[test]
    fn xor_is_learnable_by_each_algorithm() {
        let ds = xor_dataset();
        for alg in ALL {
            let mut best = f64::INFINITY;
            for seed in 0..8 {
                let mut rng = RngStream::new(seed, 0);
                let net =
                    MLPNetwork::random(&[2, 2, 1], &[Transfer::Tanh], &mut rng, 1.0).unwrap();
                let cfg = TrainerConfig {
                    algorithm: alg,
                    epochs: 400,
                    learning_rate: 0.5,
                    momentum: 0.9,
                    ..TrainerConfig::default()
                };
                let report = train(&net, &ds, &cfg).unwrap();
                best = best.min(*report.loss_curve.last().unwrap());
            }
            assert!(best < 0.1, "{:?} best XOR loss {}", alg, best);
        }
    }

    #[test]
    fn initial_blowup_is_a_divergence_error() {
        let ds = Dataset::new(
            Matrix::from_rows(&[vec![1e308]]).unwrap(),
            Matrix::from_rows(&[vec![0.0]]).unwrap(),
            "huge",
        )
        .unwrap();
        let mut net = MLPNetwork::new(&[1, 1], &[]).unwrap();
        net.set_params(&[2.0, 0.0]).unwrap();
        for alg in ALL {
            match train(&net, &ds, &config_for(alg, 10)) {
                Err(Error::TrainingDiverged(report)) => {
                    assert_eq!(report.epochs_run, 0);
                    assert!(report.loss_curve.is_empty());
                    assert_eq!(report.final_net.flatten(), vec![2.0, 0.0]);
                }
                other => panic!("{:?}: expected divergence, got {:?}", alg, other.is_ok()),
            }
        }
        let err = train(&net, &ds, &config_for(TrainAlgorithm::BP, 10)).unwrap_err();
        assert_eq!(err.to_string(), "training diverged after 0 epochs");
    }

    #[test]
    fn config_validation() {
        let ds = line_dataset();
        let net = MLPNetwork::new(&[1, 1], &[]).unwrap();
        for bad in [
            TrainerConfig {
                epochs: 0,
                ..TrainerConfig::default()
            },
            TrainerConfig {
                learning_rate: 0.0,
                ..TrainerConfig::default()
            },
            TrainerConfig {
                momentum: 1.0,
                ..TrainerConfig::default()
            },
            TrainerConfig {
                lm_factor: 1.0,
                ..TrainerConfig::default()
            },
            TrainerConfig {
                tolerance: -1.0,
                ..TrainerConfig::default()
            },
        ] {
            assert!(train(&net, &ds, &bad).is_err());
        }
        let wide = MLPNetwork::new(&[2, 1], &[]).unwrap();
        assert!(train(&wide, &ds, &TrainerConfig::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn loss_curves_never_increase(
            seed in 0u64..1000,
            alg_idx in 0usize..4,
            hidden in 1usize..4,
        ) {
            let ds = xor_dataset();
            let mut rng = RngStream::new(seed, 0);
            let net = MLPNetwork::random(&[2, hidden, 1], &[Transfer::Sigmoid], &mut rng, 1.5).unwrap();
            let cfg = TrainerConfig {
                algorithm: ALL[alg_idx],
                epochs: 30,
                learning_rate: 0.8,
                momentum: 0.9,
                tolerance: 0.0,
                ..TrainerConfig::default()
            };
            // Zero tolerance lets LM stall at a finite plateau and hit
            // the damping cap; the partial report must satisfy the same
            // monotonicity as a completed one.
            let report = match train(&net, &ds, &cfg) {
                Ok(r) => r,
                Err(Error::TrainingDiverged(r)) => *r,
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            prop_assert!(!report.loss_curve.is_empty());
            for w in report.loss_curve.windows(2) {
                prop_assert!(w[1] <= w[0], "curve increased: {:?}", report.loss_curve);
            }
            for l in &report.loss_curve {
                prop_assert!(l.is_finite() && *l >= 0.0);
            }
        }
    }
}
