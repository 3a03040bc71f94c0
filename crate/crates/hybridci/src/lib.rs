//! Hybrid computational-intelligence toolkit: neural networks, fuzzy
//! inference, and evolutionary search, plus the hybrids that combine them.
//!
//! The pieces compose in layers. [`numeric`] and [`data`] hold shared
//! plumbing. [`mlp`] and [`trainers`] cover neural models with four
//! local-search optimizers. On top of those sit the three flagship
//! hybrids: evolutionary neural-network design, neuro-fuzzy systems
//! trained by alternating least squares and gradient descent, and
//! evolved fuzzy systems, with a fuzzy supervisor for evolutionary
//! algorithm parameters rounding out the set.

pub mod config;
pub mod controller;
pub mod data;
pub mod error;
pub mod evolution;
pub mod evonf;
pub mod fuzzy;
pub mod mleann;
pub mod mlp;
pub mod neurofuzzy;
pub mod numeric;
pub mod record;
pub mod runner;
pub mod trainers;

pub use error::{Error, Result};

/// Version string stamped into run records.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
