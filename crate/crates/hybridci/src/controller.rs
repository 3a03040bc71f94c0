//! Fuzzy supervision of evolutionary-algorithm parameters.
//!
//! Every generation the controller reads three diversity measures off the
//! fitness statistics (minimization throughout, so both ratios are ≥ 1):
//!
//! - `avg_over_best` = average / best fitness, universe [1, 2]: near 1
//!   means the population has collapsed onto its best member.
//! - `worst_over_avg` = worst / average, universe [1, 3]: large means
//!   straggling outliers.
//! - `delta_best` = (best − previous best) / |previous best|, universe
//!   [−1, 0]: near 0 means progress has stalled, near −1 rapid
//!   improvement.
//!
//! Each input carries three uniform triangular terms (partition of
//! unity). Three Mamdani systems share a normalized output universe
//! [−1, 1] with terms NB / ZE / PB; the centroid is scaled by the
//! output's bandwidth (20% of population size, 0.1 crossover, 0.05
//! mutation) and hard-clamped.
//!
//! Shipped rule bases ("-" = any):
//!
//! | avg/best | worst/avg | Δbest     | Δpop | Δcross | Δmut |
//! |----------|-----------|-----------|------|--------|------|
//! | -        | -         | improving | NB   | ZE     | ZE   |
//! | -        | -         | steady    | ZE   | ZE     | -    |
//! | low      | -         | steady    | -    | -      | PB   |
//! | medium   | -         | -         | -    | -      | ZE   |
//! | high     | -         | steady    | -    | -      | NB   |
//! | low      | -         | stalled   | PB   | NB     | PB   |
//! | medium   | -         | stalled   | ZE   | ZE     | -    |
//! | high     | -         | stalled   | ZE   | PB     | ZE   |
//! | -        | high      | steady    | NB   | -      | -    |
//! | -        | high      | stalled   | -    | PB     | -    |
//!
//! The table encodes: a converged population that stopped improving
//! needs fresh diversity (more mutation, more individuals, less
//! crossover between near-identical parents); rapid improvement means
//! the population can shrink while the operators stay put; a diverse but
//! stalled population wants recombination instead of noise.

use serde::{Deserialize, Serialize};

use crate::evolution::{EAConfig, GenerationStats};
use crate::fuzzy::{
    Defuzz, FisKind, FuzzyRule, FuzzySystem, FuzzyVariable, MembershipFn, RuleConsequent, TConorm,
    TNorm, uniform_triangles,
};

/// Maximum |Δ population| as a fraction of the current population size.
pub const POP_BANDWIDTH: f64 = 0.2;
/// Maximum |Δ crossover rate|.
pub const CROSSOVER_BANDWIDTH: f64 = 0.1;
/// Maximum |Δ mutation rate|.
pub const MUTATION_BANDWIDTH: f64 = 0.05;

/// Neutral inputs substituted when the statistics are degenerate
/// (non-finite or best ≤ 0); they defuzzify to zero deltas.
const NEUTRAL: (f64, f64, f64) = (1.5, 2.0, -0.5);

/// Per-generation parameter deltas, already clamped to bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerOutputs {
    pub delta_pop: i64,
    pub delta_crossover: f64,
    pub delta_mutation: f64,
}

/// The three Mamdani systems. Replaceable wholesale: any systems with
/// the same three inputs and a symmetric output universe slot in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyController {
    pub population: FuzzySystem,
    pub crossover: FuzzySystem,
    pub mutation: FuzzySystem,
}

fn relabel(mut terms: Vec<MembershipFn>, labels: [&str; 3]) -> Vec<MembershipFn> {
    for (t, l) in terms.iter_mut().zip(labels) {
        t.label = (*l).to_string();
    }
    terms
}

// Term indices, in universe order.
const LOW: usize = 0;
const MED: usize = 1;
const HIGH: usize = 2;
const IMPROVING: usize = 0;
const STEADY: usize = 1;
const STALLED: usize = 2;
const NB: usize = 0;
const ZE: usize = 1;
const PB: usize = 2;

fn rule(a: Option<usize>, w: Option<usize>, d: Option<usize>, out: usize) -> FuzzyRule {
    FuzzyRule {
        antecedent: vec![a, w, d],
        consequent: RuleConsequent::OutputTerm(out),
        weight: 1.0,
    }
}

impl FuzzyController {
    /// The documented rule base above.
    pub fn shipped() -> FuzzyController {
        let inputs = || -> Vec<FuzzyVariable> {
            vec![
                FuzzyVariable::new(
                    "avg_over_best",
                    (1.0, 2.0),
                    relabel(
                        uniform_triangles((1.0, 2.0), 3).expect("static universe"),
                        ["low", "medium", "high"],
                    ),
                )
                .expect("static variable"),
                FuzzyVariable::new(
                    "worst_over_avg",
                    (1.0, 3.0),
                    relabel(
                        uniform_triangles((1.0, 3.0), 3).expect("static universe"),
                        ["low", "medium", "high"],
                    ),
                )
                .expect("static variable"),
                FuzzyVariable::new(
                    "delta_best",
                    (-1.0, 0.0),
                    relabel(
                        uniform_triangles((-1.0, 0.0), 3).expect("static universe"),
                        ["improving", "steady", "stalled"],
                    ),
                )
                .expect("static variable"),
            ]
        };
        let output = |name: &str| {
            FuzzyVariable::new(
                name,
                (-1.0, 1.0),
                relabel(
                    uniform_triangles((-1.0, 1.0), 3).expect("static universe"),
                    ["nb", "ze", "pb"],
                ),
            )
            .expect("static variable")
        };
        let system = |name: &str, rules: Vec<FuzzyRule>| {
            let fs = FuzzySystem {
                kind: FisKind::Mamdani,
                inputs: inputs(),
                output: Some(output(name)),
                rules,
                tnorm: TNorm::Product,
                tconorm: TConorm::Max,
                defuzz: Defuzz::Centroid,
            };
            fs.validate().expect("shipped rule base is valid");
            fs
        };

        FuzzyController {
            population: system(
                "delta_pop",
                vec![
                    rule(None, None, Some(IMPROVING), NB),
                    rule(None, None, Some(STEADY), ZE),
                    rule(Some(LOW), None, Some(STALLED), PB),
                    rule(Some(MED), None, Some(STALLED), ZE),
                    rule(Some(HIGH), None, Some(STALLED), ZE),
                    rule(None, Some(HIGH), Some(STEADY), NB),
                ],
            ),
            crossover: system(
                "delta_crossover",
                vec![
                    rule(None, None, Some(IMPROVING), ZE),
                    rule(None, None, Some(STEADY), ZE),
                    rule(Some(LOW), None, Some(STALLED), NB),
                    rule(Some(MED), None, Some(STALLED), ZE),
                    rule(Some(HIGH), None, Some(STALLED), PB),
                    rule(None, Some(HIGH), Some(STALLED), PB),
                ],
            ),
            mutation: system(
                "delta_mutation",
                vec![
                    rule(None, None, Some(IMPROVING), ZE),
                    rule(Some(LOW), None, Some(STEADY), PB),
                    rule(Some(LOW), None, Some(STALLED), PB),
                    rule(Some(MED), None, None, ZE),
                    rule(Some(HIGH), None, Some(STEADY), NB),
                    rule(Some(HIGH), None, Some(STALLED), ZE),
                ],
            ),
        }
    }

    /// Fuzzify the statistics, evaluate all three systems, scale by the
    /// bandwidths, clamp. Pure: same inputs, same outputs.
    pub fn step(&self, stats: &GenerationStats, prev_best: f64) -> ControllerOutputs {
        let degenerate = !stats.best.is_finite()
            || !stats.average.is_finite()
            || !stats.worst.is_finite()
            || !prev_best.is_finite()
            || stats.best <= 0.0;
        let (a, w, d) = if degenerate {
            NEUTRAL
        } else {
            let a = (stats.average / stats.best).clamp(1.0, 2.0);
            let w = (stats.worst / stats.average).clamp(1.0, 3.0);
            let d = if prev_best > 0.0 {
                ((stats.best - prev_best) / prev_best.abs()).clamp(-1.0, 0.0)
            } else {
                NEUTRAL.2
            };
            (a, w, d)
        };
        let x = [a, w, d];
        // Inputs are clamped into the universes, so activation is never
        // zero; the midpoint fallback (0 → zero delta) is still safe.
        let eval = |fs: &FuzzySystem| fs.infer(&x).map(|o| o.value).unwrap_or(0.0);

        let pop_band = (POP_BANDWIDTH * stats.population_size as f64).floor() as i64;
        let delta_pop = ((eval(&self.population) * POP_BANDWIDTH * stats.population_size as f64)
            .round() as i64)
            .clamp(-pop_band, pop_band);
        ControllerOutputs {
            delta_pop,
            delta_crossover: (eval(&self.crossover) * CROSSOVER_BANDWIDTH)
                .clamp(-CROSSOVER_BANDWIDTH, CROSSOVER_BANDWIDTH),
            delta_mutation: (eval(&self.mutation) * MUTATION_BANDWIDTH)
                .clamp(-MUTATION_BANDWIDTH, MUTATION_BANDWIDTH),
        }
    }
}

/// One adaptation step with the shipped rule base.
pub fn controller_step(stats: &GenerationStats, prev_best: f64) -> ControllerOutputs {
    FuzzyController::shipped().step(stats, prev_best)
}

/// Apply deltas to a config, preserving its invariants: the population
/// never drops below 2 + elitism (nor below tournament_k), and the rates
/// stay in [0, 1].
pub fn apply_outputs(cfg: &EAConfig, out: &ControllerOutputs) -> EAConfig {
    let floor = (cfg.elitism + 2).max(cfg.tournament_k) as i64;
    let mut new = cfg.clone();
    new.population_size = (cfg.population_size as i64 + out.delta_pop).max(floor) as usize;
    new.crossover_rate = (cfg.crossover_rate + out.delta_crossover).clamp(0.0, 1.0);
    new.mutation_rate = (cfg.mutation_rate + out.delta_mutation).clamp(0.0, 1.0);
    new
}
