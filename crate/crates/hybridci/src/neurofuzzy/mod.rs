//! Integrated neuro-fuzzy training and fuzzy associative memories.
//!
//! Two trainers adapt a fuzzy system from data: Takagi-Sugeno systems learn
//! by alternating least-squares consequent estimation with gradient steps
//! on the antecedent membership functions, and Mamdani systems learn all
//! membership parameters by numeric gradient descent. Both keep their loss
//! curves non-increasing via step-halving acceptance.

mod fam;
mod hybrid;
mod mamdani;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fuzzy::FuzzySystem;

pub use fam::{fam_recall, fam_store, FamRecall, FAMStore};
pub use hybrid::{antecedent_gradient, hybrid_train_ts};
pub use mamdani::gradient_train_mamdani;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NFTrainConfig {
    pub epochs: usize,
    /// Step size for the membership-parameter gradient pass. Zero disables
    /// the pass, leaving antecedents (or all MFs) untouched.
    pub antecedent_lr: f64,
    /// Ridge regularization for the consequent least-squares solve.
    pub ridge: f64,
    /// Skip the antecedent gradient pass entirely.
    pub freeze_antecedents: bool,
}

impl Default for NFTrainConfig {
    fn default() -> Self {
        NFTrainConfig {
            epochs: 10,
            antecedent_lr: 0.01,
            ridge: 0.0,
            freeze_antecedents: false,
        }
    }
}

impl NFTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidInput("nf trainer: epochs must be >= 1".into()));
        }
        if !(self.antecedent_lr.is_finite() && self.antecedent_lr >= 0.0) {
            return Err(Error::InvalidInput(
                "nf trainer: antecedent_lr must be >= 0".into(),
            ));
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(Error::InvalidInput("nf trainer: ridge must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NFTrainReport {
    pub system: FuzzySystem,
    /// Initial sse followed by the sse after each epoch.
    pub loss_curve: Vec<f64>,
    /// Training lost finiteness and stopped early; `system` is the best
    /// finite state seen.
    pub diverged: bool,
}

/// Sum of squared errors of the system on a single-output dataset.
pub fn fis_sse(fs: &FuzzySystem, ds: &Dataset) -> Result<f64> {
    let mut sse = 0.0;
    for i in 0..ds.len() {
        let y = fs.infer(ds.inputs.row(i))?.value;
        let e = y - ds.targets.get(i, 0);
        sse += e * e;
    }
    Ok(sse)
}

pub(crate) fn check_shapes(fs: &FuzzySystem, ds: &Dataset) -> Result<()> {
    fs.validate()?;
    if ds.is_empty() {
        return Err(Error::InvalidInput("nf trainer: empty dataset".into()));
    }
    if ds.input_width() != fs.inputs.len() {
        return Err(Error::InvalidInput(format!(
            "nf trainer: {} dataset inputs vs {} system inputs",
            ds.input_width(),
            fs.inputs.len()
        )));
    }
    if ds.target_width() != 1 {
        return Err(Error::InvalidInput(
            "nf trainer: fuzzy systems predict a single output".into(),
        ));
    }
    Ok(())
}
