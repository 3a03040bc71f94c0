//! Feedforward multilayer perceptrons with linear outputs.
//!
//! Weight layout: `weights[l]` maps layer `l` to layer `l+1` and has shape
//! `layer_sizes[l+1] × (layer_sizes[l] + 1)` with the bias in the last
//! column. Flattened parameter vectors are layer-major, row-major within a
//! layer, so each row's bias follows its input weights.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{Matrix, RngStream};

/// Hidden-layer transfer functions. Output units are always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transfer {
    Sigmoid,
    Tanh,
    Gaussian,
}

impl Transfer {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Transfer::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Transfer::Tanh => z.tanh(),
            Transfer::Gaussian => (-z * z).exp(),
        }
    }

    /// Derivative at pre-activation `z` given the already computed
    /// activation `a = apply(z)`.
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Transfer::Sigmoid => a * (1.0 - a),
            Transfer::Tanh => 1.0 - a * a,
            Transfer::Gaussian => -2.0 * z * a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MLPNetwork {
    pub layer_sizes: Vec<usize>,
    pub transfers: Vec<Transfer>,
    pub weights: Vec<Matrix>,
}

impl MLPNetwork {
    /// Zero-weight network. `transfers` has one entry per hidden layer.
    pub fn new(layer_sizes: &[usize], transfers: &[Transfer]) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidInput(
                "network needs at least input and output layers".into(),
            ));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidInput("zero-width layer".into()));
        }
        if transfers.len() != layer_sizes.len() - 2 {
            return Err(Error::InvalidInput(format!(
                "{} hidden layers but {} transfers",
                layer_sizes.len() - 2,
                transfers.len()
            )));
        }
        let weights = (0..layer_sizes.len() - 1)
            .map(|l| Matrix::zeros(layer_sizes[l + 1], layer_sizes[l] + 1))
            .collect();
        Ok(MLPNetwork {
            layer_sizes: layer_sizes.to_vec(),
            transfers: transfers.to_vec(),
            weights,
        })
    }

    /// Network with weights drawn uniformly from `[-scale, scale]`.
    pub fn random(
        layer_sizes: &[usize],
        transfers: &[Transfer],
        rng: &mut RngStream,
        scale: f64,
    ) -> Result<Self> {
        let mut net = MLPNetwork::new(layer_sizes, transfers)?;
        for w in &mut net.weights {
            for r in 0..w.rows() {
                for c in 0..w.cols() {
                    w.set(r, c, rng.uniform(-scale, scale));
                }
            }
        }
        Ok(net)
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.rows() * w.cols()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for w in &self.weights {
            out.extend_from_slice(w.as_slice());
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut offset = 0;
        for w in &mut self.weights {
            let n = w.rows() * w.cols();
            let block = &params[offset..offset + n];
            let replacement = Matrix::from_vec(w.rows(), w.cols(), block.to_vec())?;
            *w = replacement;
            offset += n;
        }
        Ok(())
    }

    /// Forward pass recording pre-activations and activations per layer.
    /// `activations[0]` is the input; both vectors have one entry per
    /// non-input layer in `zs`.
    fn forward_trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let depth = self.weights.len();
        let mut activations = Vec::with_capacity(depth + 1);
        let mut zs = Vec::with_capacity(depth);
        activations.push(x.to_vec());
        for l in 0..depth {
            let w = &self.weights[l];
            let prev = &activations[l];
            let mut z = vec![0.0; w.rows()];
            for r in 0..w.rows() {
                let row = w.row(r);
                let mut acc = row[w.cols() - 1];
                for (c, &p) in prev.iter().enumerate() {
                    acc += row[c] * p;
                }
                z[r] = acc;
            }
            let a: Vec<f64> = if l + 1 < depth + 1 && l < self.transfers.len() {
                z.iter().map(|&v| self.transfers[l].apply(v)).collect()
            } else {
                z.clone()
            };
            zs.push(z);
            activations.push(a);
        }
        (zs, activations)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (_, activations) = self.forward_trace(x);
        activations.into_iter().last().unwrap()
    }

    pub fn forward_batch(&self, inputs: &Matrix) -> Result<Matrix> {
        if inputs.cols() != self.input_width() {
            return Err(Error::InvalidInput(format!(
                "network expects {} inputs, dataset has {}",
                self.input_width(),
                inputs.cols()
            )));
        }
        let rows: Vec<Vec<f64>> = (0..inputs.rows())
            .map(|r| self.forward(inputs.row(r)))
            .collect();
        Matrix::from_rows(&rows)
    }

    /// Sum of squared errors over the dataset. May return a non-finite
    /// value when the forward pass overflows; trainers treat that as a
    /// rejected state.
    pub fn loss(&self, ds: &Dataset) -> Result<f64> {
        if ds.input_width() != self.input_width() || ds.target_width() != self.output_width() {
            return Err(Error::InvalidInput("loss: shape mismatch".into()));
        }
        let mut sse = 0.0;
        for i in 0..ds.len() {
            let y = self.forward(ds.inputs.row(i));
            for (a, t) in y.iter().zip(ds.targets.row(i)) {
                sse += (a - t) * (a - t);
            }
        }
        Ok(sse)
    }

    /// Backpropagate one sample. `seed` is dψ/dy at the output; per-layer
    /// weight gradients are accumulated into `grads`.
    fn backprop_into(
        &self,
        zs: &[Vec<f64>],
        activations: &[Vec<f64>],
        seed: &[f64],
        grads: &mut [Matrix],
    ) {
        let depth = self.weights.len();
        let mut delta = seed.to_vec();
        for l in (0..depth).rev() {
            let w = &self.weights[l];
            let prev = &activations[l];
            let g = &mut grads[l];
            for r in 0..w.rows() {
                let d = delta[r];
                for (c, &p) in prev.iter().enumerate() {
                    *g.at_mut(r, c) += d * p;
                }
                *g.at_mut(r, w.cols() - 1) += d;
            }
            if l == 0 {
                break;
            }
            let mut next = vec![0.0; w.cols() - 1];
            for (c, slot) in next.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (r, &d) in delta.iter().enumerate() {
                    acc += w.get(r, c) * d;
                }
                let transfer = self.transfers[l - 1];
                *slot = acc * transfer.derivative(zs[l - 1][c], activations[l][c]);
            }
            delta = next;
        }
    }

    /// Gradient of the SSE loss, flattened in parameter order.
    pub fn gradient(&self, ds: &Dataset) -> Result<Vec<f64>> {
        if ds.input_width() != self.input_width() || ds.target_width() != self.output_width() {
            return Err(Error::InvalidInput("gradient: shape mismatch".into()));
        }
        let mut grads: Vec<Matrix> = self
            .weights
            .iter()
            .map(|w| Matrix::zeros(w.rows(), w.cols()))
            .collect();
        for i in 0..ds.len() {
            let (zs, activations) = self.forward_trace(ds.inputs.row(i));
            let y = activations.last().unwrap();
            let seed: Vec<f64> = y
                .iter()
                .zip(ds.targets.row(i))
                .map(|(a, t)| 2.0 * (a - t))
                .collect();
            self.backprop_into(&zs, &activations, &seed, &mut grads);
        }
        let mut flat = Vec::with_capacity(self.param_count());
        for g in &grads {
            flat.extend_from_slice(g.as_slice());
        }
        Ok(flat)
    }

    /// Jacobian of the stacked residual vector r = y − t (one row per
    /// sample-output pair) with respect to the flattened parameters, plus
    /// the residuals themselves. The SSE gradient equals `2 Jᵀ r`.
    pub fn jacobian(&self, ds: &Dataset) -> Result<(Matrix, Vec<f64>)> {
        if ds.input_width() != self.input_width() || ds.target_width() != self.output_width() {
            return Err(Error::InvalidInput("jacobian: shape mismatch".into()));
        }
        let p = self.param_count();
        let m = self.output_width();
        let mut jac = Matrix::zeros(ds.len() * m, p);
        let mut residuals = Vec::with_capacity(ds.len() * m);
        for i in 0..ds.len() {
            let (zs, activations) = self.forward_trace(ds.inputs.row(i));
            let y = activations.last().unwrap().clone();
            for k in 0..m {
                let mut grads: Vec<Matrix> = self
                    .weights
                    .iter()
                    .map(|w| Matrix::zeros(w.rows(), w.cols()))
                    .collect();
                let mut seed = vec![0.0; m];
                seed[k] = 1.0;
                self.backprop_into(&zs, &activations, &seed, &mut grads);
                let row = jac.row_mut(i * m + k);
                let mut offset = 0;
                for g in &grads {
                    let s = g.as_slice();
                    row[offset..offset + s.len()].copy_from_slice(s);
                    offset += s.len();
                }
                residuals.push(y[k] - ds.targets.get(i, k));
            }
        }
        Ok((jac, residuals))
    }
}
