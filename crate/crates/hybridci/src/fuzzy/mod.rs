//! Core fuzzy inference: membership functions, T-norms and T-conorms, grid
//! partitioning, Mamdani and Takagi-Sugeno inference, defuzzification.

mod grid;
mod membership;
mod ops;
mod system;

pub use grid::{grid_partition, uniform_triangles};
pub use membership::{mf_eval, mf_param_grad, MembershipFn, MfKind};
pub use ops::{Defuzz, TConorm, TNorm};
pub use system::{
    normalize_firing, FisKind, FuzzyRule, FuzzySystem, FuzzyVariable, InferenceOutput,
    RuleConsequent, DEFAULT_RESOLUTION,
};
