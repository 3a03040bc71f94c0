//! Fuzzy variables, rules, and the two inference styles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::membership::{mf_eval, MembershipFn};
use super::ops::{Defuzz, TConorm, TNorm};

/// Default output-grid resolution for Mamdani defuzzification.
pub const DEFAULT_RESOLUTION: usize = 201;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyVariable {
    pub name: String,
    pub universe: (f64, f64),
    pub terms: Vec<MembershipFn>,
}

impl FuzzyVariable {
    pub fn new(
        name: impl Into<String>,
        universe: (f64, f64),
        terms: Vec<MembershipFn>,
    ) -> Result<Self> {
        let var = FuzzyVariable {
            name: name.into(),
            universe,
            terms,
        };
        var.validate()?;
        Ok(var)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.universe;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!(
                "variable {}: universe ({}, {}) is not a proper interval",
                self.name, lo, hi
            )));
        }
        if self.terms.is_empty() {
            return Err(Error::InvalidInput(format!(
                "variable {}: no terms",
                self.name
            )));
        }
        for t in &self.terms {
            t.validate()?;
        }
        for (i, t) in self.terms.iter().enumerate() {
            if self.terms[..i].iter().any(|u| u.label == t.label) {
                return Err(Error::InvalidInput(format!(
                    "variable {}: duplicate term label {:?}",
                    self.name, t.label
                )));
            }
        }
        Ok(())
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.universe.0 + self.universe.1)
    }
}

/// Rule right-hand side: an output term for Mamdani, a first-order linear
/// model for Takagi-Sugeno.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleConsequent {
    OutputTerm(usize),
    Linear { coeffs: Vec<f64>, offset: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    /// Per-input term index; `None` is "any" and contributes membership 1.
    pub antecedent: Vec<Option<usize>>,
    pub consequent: RuleConsequent,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisKind {
    Mamdani,
    TakagiSugeno,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzySystem {
    pub kind: FisKind,
    pub inputs: Vec<FuzzyVariable>,
    /// Output variable; required for Mamdani, absent for Takagi-Sugeno.
    pub output: Option<FuzzyVariable>,
    pub rules: Vec<FuzzyRule>,
    pub tnorm: TNorm,
    pub tconorm: TConorm,
    /// Mamdani only; ignored for Takagi-Sugeno.
    pub defuzz: Defuzz,
}

/// Crisp inference result with the degenerate-input marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceOutput {
    pub value: f64,
    /// True when no rule fired and the output fell back to a default.
    pub zero_activation: bool,
}

impl FuzzySystem {
    pub fn validate(&self) -> Result<()> {
        if self.inputs.is_empty() {
            return Err(Error::InvalidInput("fuzzy system: no inputs".into()));
        }
        for v in &self.inputs {
            v.validate()?;
        }
        if self.rules.is_empty() {
            return Err(Error::InvalidInput("fuzzy system: no rules".into()));
        }
        match (self.kind, &self.output) {
            (FisKind::Mamdani, None) => {
                return Err(Error::InvalidInput(
                    "mamdani system needs an output variable".into(),
                ));
            }
            (FisKind::Mamdani, Some(out)) => out.validate()?,
            (FisKind::TakagiSugeno, Some(_)) => {
                return Err(Error::InvalidInput(
                    "takagi-sugeno system carries no output variable".into(),
                ));
            }
            (FisKind::TakagiSugeno, None) => {}
        }
        for (ri, rule) in self.rules.iter().enumerate() {
            if rule.antecedent.len() != self.inputs.len() {
                return Err(Error::InvalidInput(format!(
                    "rule {}: antecedent width {} vs {} inputs",
                    ri,
                    rule.antecedent.len(),
                    self.inputs.len()
                )));
            }
            for (vi, slot) in rule.antecedent.iter().enumerate() {
                if let Some(t) = slot {
                    if *t >= self.inputs[vi].terms.len() {
                        return Err(Error::InvalidInput(format!(
                            "rule {}: term {} out of range for input {}",
                            ri, t, vi
                        )));
                    }
                }
            }
            if !(0.0..=1.0).contains(&rule.weight) {
                return Err(Error::InvalidInput(format!(
                    "rule {}: weight {} outside [0,1]",
                    ri, rule.weight
                )));
            }
            match (&rule.consequent, self.kind) {
                (RuleConsequent::OutputTerm(t), FisKind::Mamdani) => {
                    let out = self.output.as_ref().unwrap();
                    if *t >= out.terms.len() {
                        return Err(Error::InvalidInput(format!(
                            "rule {}: output term {} out of range",
                            ri, t
                        )));
                    }
                }
                (RuleConsequent::Linear { coeffs, .. }, FisKind::TakagiSugeno) => {
                    if coeffs.len() != self.inputs.len() {
                        return Err(Error::InvalidInput(format!(
                            "rule {}: {} coefficients for {} inputs",
                            ri,
                            coeffs.len(),
                            self.inputs.len()
                        )));
                    }
                }
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "rule {}: consequent shape does not match system kind",
                        ri
                    )));
                }
            }
        }
        Ok(())
    }

    /// Per-rule firing strengths: T-norm over antecedent memberships,
    /// scaled by the rule weight. "Any" slots contribute the identity 1.
    pub fn firing_strengths(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs.len() {
            return Err(Error::InvalidInput(format!(
                "input width {} vs {} variables",
                x.len(),
                self.inputs.len()
            )));
        }
        Ok(self
            .rules
            .iter()
            .map(|rule| {
                let mut w = 1.0;
                for (vi, slot) in rule.antecedent.iter().enumerate() {
                    if let Some(t) = slot {
                        let mu = mf_eval(&self.inputs[vi].terms[*t], x[vi]);
                        w = self.tnorm.apply(w, mu);
                    }
                }
                w * rule.weight
            })
            .collect())
    }

    /// Takagi-Sugeno inference: normalized firing strengths weighting the
    /// per-rule linear models.
    pub fn infer_ts(&self, x: &[f64]) -> Result<InferenceOutput> {
        debug_assert_eq!(self.kind, FisKind::TakagiSugeno);
        let w = self.firing_strengths(x)?;
        let (wn, zero) = normalize_firing(&w);
        let mut y = 0.0;
        for (rule, wi) in self.rules.iter().zip(&wn) {
            let RuleConsequent::Linear { coeffs, offset } = &rule.consequent else {
                return Err(Error::InvalidInput("infer_ts on a mamdani rule".into()));
            };
            let f: f64 = coeffs.iter().zip(x).map(|(c, xi)| c * xi).sum::<f64>() + offset;
            y += wi * f;
        }
        Ok(InferenceOutput {
            value: y,
            zero_activation: zero,
        })
    }

    /// Mamdani inference: clip each consequent at its firing strength,
    /// aggregate pointwise by the T-conorm over a uniform output grid, then
    /// defuzzify. Zero aggregate falls back to the universe midpoint.
    pub fn infer_mamdani(&self, x: &[f64], resolution: usize) -> Result<InferenceOutput> {
        debug_assert_eq!(self.kind, FisKind::Mamdani);
        if resolution < 16 {
            return Err(Error::InvalidInput("resolution must be >= 16".into()));
        }
        let out = self
            .output
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("mamdani inference without output".into()))?;
        let w = self.firing_strengths(x)?;
        let (lo, hi) = out.universe;
        let step = (hi - lo) / (resolution - 1) as f64;

        let mut aggregate = vec![0.0; resolution];
        for (rule, wi) in self.rules.iter().zip(&w) {
            if *wi == 0.0 {
                continue;
            }
            let RuleConsequent::OutputTerm(t) = &rule.consequent else {
                return Err(Error::InvalidInput("infer_mamdani on a TS rule".into()));
            };
            let mf = &out.terms[*t];
            for (j, agg) in aggregate.iter_mut().enumerate() {
                let z = lo + j as f64 * step;
                let clipped = wi.min(mf_eval(mf, z));
                *agg = self.tconorm.apply(*agg, clipped);
            }
        }

        let total: f64 = aggregate.iter().sum();
        if total == 0.0 {
            return Ok(InferenceOutput {
                value: out.midpoint(),
                zero_activation: true,
            });
        }
        let value = match self.defuzz {
            Defuzz::Centroid => {
                let weighted: f64 = aggregate
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * (lo + j as f64 * step))
                    .sum();
                weighted / total
            }
            Defuzz::MeanOfMaxima => {
                let max = aggregate.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let first = aggregate.iter().position(|a| *a == max).unwrap();
                let last = aggregate.iter().rposition(|a| *a == max).unwrap();
                lo + 0.5 * (first + last) as f64 * step
            }
        };
        Ok(InferenceOutput {
            value,
            zero_activation: false,
        })
    }

    /// Crisp output regardless of kind, using the default resolution for
    /// Mamdani systems.
    pub fn infer(&self, x: &[f64]) -> Result<InferenceOutput> {
        match self.kind {
            FisKind::TakagiSugeno => self.infer_ts(x),
            FisKind::Mamdani => self.infer_mamdani(x, DEFAULT_RESOLUTION),
        }
    }

    /// Crisp outputs for every row of `inputs` as an n×1 matrix.
    pub fn predict_batch(&self, inputs: &crate::numeric::Matrix) -> Result<crate::numeric::Matrix> {
        let rows: Vec<Vec<f64>> = (0..inputs.rows())
            .map(|r| self.infer(inputs.row(r)).map(|o| vec![o.value]))
            .collect::<Result<_>>()?;
        crate::numeric::Matrix::from_rows(&rows)
    }

    /// All antecedent (input) MF parameters, variable by variable, term by
    /// term.
    pub fn antecedent_params(&self) -> Vec<f64> {
        self.inputs
            .iter()
            .flat_map(|v| v.terms.iter().flat_map(|t| t.params()))
            .collect()
    }

    /// Replace antecedent MF parameters; fails when any shape invariant
    /// breaks, leaving the original untouched.
    pub fn with_antecedent_params(&self, params: &[f64]) -> Result<FuzzySystem> {
        let mut fs = self.clone();
        let mut offset = 0;
        for v in &mut fs.inputs {
            for t in &mut v.terms {
                let n = t.param_count();
                if offset + n > params.len() {
                    return Err(Error::InvalidInput("too few antecedent parameters".into()));
                }
                *t = t.with_params(&params[offset..offset + n])?;
                offset += n;
            }
        }
        if offset != params.len() {
            return Err(Error::InvalidInput("too many antecedent parameters".into()));
        }
        Ok(fs)
    }

    /// All MF parameters: antecedents followed by output terms (if any).
    pub fn all_mf_params(&self) -> Vec<f64> {
        let mut p = self.antecedent_params();
        if let Some(out) = &self.output {
            p.extend(out.terms.iter().flat_map(|t| t.params()));
        }
        p
    }

    pub fn with_all_mf_params(&self, params: &[f64]) -> Result<FuzzySystem> {
        let n_ant = self.antecedent_params().len();
        if params.len() < n_ant {
            return Err(Error::InvalidInput("too few MF parameters".into()));
        }
        let mut fs = self.with_antecedent_params(&params[..n_ant])?;
        let mut offset = n_ant;
        if let Some(out) = &mut fs.output {
            for t in &mut out.terms {
                let n = t.param_count();
                if offset + n > params.len() {
                    return Err(Error::InvalidInput("too few MF parameters".into()));
                }
                *t = t.with_params(&params[offset..offset + n])?;
                offset += n;
            }
        }
        if offset != params.len() {
            return Err(Error::InvalidInput("too many MF parameters".into()));
        }
        Ok(fs)
    }

    /// Count of free parameters: MF parameters plus TS consequents.
    pub fn param_count(&self) -> usize {
        let consequents: usize = self
            .rules
            .iter()
            .map(|r| match &r.consequent {
                RuleConsequent::Linear { coeffs, .. } => coeffs.len() + 1,
                RuleConsequent::OutputTerm(_) => 0,
            })
            .sum();
        self.all_mf_params().len() + consequents
    }
}

/// Eq-3 normalization: w̄ᵢ = wᵢ / Σwⱼ. A zero sum returns uniform weights
/// and raises the flag so degenerate genomes stay evaluable.
pub fn normalize_firing(w: &[f64]) -> (Vec<f64>, bool) {
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        return (vec![1.0 / w.len() as f64; w.len()], true);
    }
    (w.iter().map(|wi| wi / total).collect(), false)
}
