//! Real-coded evolutionary engine: elitism, tournament selection,
//! Gaussian mutation with per-span scales, optional blend crossover, and
//! a pluggable per-generation parameter adapter.
//!
//! Genomes are flat real vectors carved into named spans. Spans give the
//! semantic levels (learning params, architecture, weights, ...) their
//! own mutation scale, which is how the level-dependent time scales of
//! the hybrid searches are realized: larger sigma, faster level.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{apply_outputs, controller_step};
use crate::error::{Error, Result};
use crate::numeric::RngStream;

/// Fitness surrogate for non-finite evaluations; anything at or above
/// this counts as penalized in [`GenerationStats`].
pub const PENALTY_FITNESS: f64 = 1e30;

/// Blend-crossover expansion used by the engine's breeding step.
pub const ENGINE_BLX_ALPHA: f64 = 0.5;

/// Stream ids below this are fitness evaluation; at or above, variation
/// (init and breeding). Keeps the two domains from sharing sequences.
const VARIATION_BASE: u64 = 1 << 31;

/// Nearest integer with halves rounding down. Decoders bin categorical
/// genes with it so span midpoints land on documented defaults.
pub fn round_half_down(x: f64) -> f64 {
    (x - 0.5).ceil()
}

/// Map a gene to one of `count` categories, clamped to the valid range.
pub fn gene_bin(x: f64, count: usize) -> usize {
    (round_half_down(x).max(0.0) as usize).min(count - 1)
}

/// A contiguous run of genes with per-gene bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub name: String,
    pub start: usize,
    /// (lo, hi) per gene, lo ≤ hi. A degenerate lo == hi pins the gene.
    pub bounds: Vec<(f64, f64)>,
}

impl Span {
    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn end(&self) -> usize {
        self.start + self.bounds.len()
    }
}

/// Flat real-valued genome. Spans are contiguous, in order, and cover
/// the gene vector exactly; every gene stays within its bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub genes: Vec<f64>,
    pub layout: Vec<Span>,
}

impl Genome {
    pub fn new(genes: Vec<f64>, layout: Vec<Span>) -> Result<Self> {
        let g = Genome { genes, layout };
        g.validate()?;
        Ok(g)
    }

    /// Uniform draw within bounds for every gene.
    pub fn random(layout: &[Span], rng: &mut RngStream) -> Genome {
        let mut genes = Vec::new();
        for span in layout {
            for (lo, hi) in &span.bounds {
                genes.push(rng.uniform(*lo, *hi));
            }
        }
        Genome {
            genes,
            layout: layout.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut cursor = 0;
        for span in &self.layout {
            if span.start != cursor {
                return Err(Error::InvalidInput(format!(
                    "span {} starts at {} but previous spans end at {}",
                    span.name, span.start, cursor
                )));
            }
            cursor = span.end();
            for (lo, hi) in &span.bounds {
                if !lo.is_finite() || !hi.is_finite() || lo > hi {
                    return Err(Error::InvalidInput(format!(
                        "span {} has invalid bounds ({}, {})",
                        span.name, lo, hi
                    )));
                }
            }
        }
        if cursor != self.genes.len() {
            return Err(Error::InvalidInput(format!(
                "layout covers {} genes but genome has {}",
                cursor,
                self.genes.len()
            )));
        }
        for (i, g) in self.genes.iter().enumerate() {
            let (lo, hi) = self.bounds_of(i);
            if !g.is_finite() || *g < lo || *g > hi {
                return Err(Error::InvalidInput(format!(
                    "gene {} = {} outside bounds ({}, {})",
                    i, g, lo, hi
                )));
            }
        }
        Ok(())
    }

    /// Index of the span containing gene `i`.
    pub fn span_index_of(&self, i: usize) -> usize {
        self.layout
            .iter()
            .position(|s| i >= s.start && i < s.end())
            .expect("gene index within layout")
    }

    pub fn bounds_of(&self, i: usize) -> (f64, f64) {
        let s = &self.layout[self.span_index_of(i)];
        s.bounds[i - s.start]
    }

    pub fn span(&self, name: &str) -> Option<&Span> {
        self.layout.iter().find(|s| s.name == name)
    }

    /// Genes of the named span.
    pub fn genes_of(&self, name: &str) -> Option<&[f64]> {
        self.span(name).map(|s| &self.genes[s.start..s.end()])
    }
}

/// Per-generation parameter adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adapter {
    #[default]
    None,
    FuzzyController,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EAConfig {
    pub population_size: usize,
    pub generations: usize,
    pub elitism: usize,
    pub tournament_k: usize,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// One sigma per span, relative to each gene's bound width.
    pub mutation_sigma: Vec<f64>,
    pub crossover_rate: f64,
    pub seed: u64,
    pub adapter: Adapter,
    /// Best fitness below this stops the run early; 0 disables the stop
    /// for nonnegative fitness.
    pub stop_tolerance: f64,
}

impl Default for EAConfig {
    fn default() -> Self {
        EAConfig {
            population_size: 30,
            generations: 40,
            elitism: 1,
            tournament_k: 3,
            mutation_rate: 0.2,
            mutation_sigma: vec![0.1],
            crossover_rate: 0.0,
            seed: 0,
            adapter: Adapter::None,
            stop_tolerance: 0.0,
        }
    }
}

impl EAConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::InvalidInput("population_size must be >= 2".into()));
        }
        if self.elitism < 1 || self.elitism >= self.population_size {
            return Err(Error::InvalidInput(
                "elitism must be >= 1 and < population_size".into(),
            ));
        }
        if self.tournament_k < 2 || self.tournament_k > self.population_size {
            return Err(Error::InvalidInput(
                "tournament_k must be >= 2 and <= population_size".into(),
            ));
        }
        for (name, p) in [
            ("mutation_rate", self.mutation_rate),
            ("crossover_rate", self.crossover_rate),
        ] {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidInput(format!("{} must be in [0, 1]", name)));
            }
        }
        if self.mutation_sigma.is_empty()
            || self.mutation_sigma.iter().any(|s| !s.is_finite() || *s < 0.0)
        {
            return Err(Error::InvalidInput(
                "mutation_sigma needs one nonnegative value per span".into(),
            ));
        }
        if !self.stop_tolerance.is_finite() || self.stop_tolerance < 0.0 {
            return Err(Error::InvalidInput(
                "stop_tolerance must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// One generation's fitness summary (minimization: best ≤ average ≤
/// worst) plus the live parameter values that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub average: f64,
    pub worst: f64,
    pub population_size: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    /// Individuals carrying the penalty fitness this generation.
    pub penalized: usize,
}

/// Best of `k` uniform draws with replacement; fitness ties break toward
/// the lowest index. Once k reaches the population size the tournament
/// is the whole population, so the global best always wins.
pub fn tournament_select(fitnesses: &[f64], k: usize, rng: &mut RngStream) -> usize {
    assert!(!fitnesses.is_empty() && k >= 1);
    let n = fitnesses.len();
    if k >= n {
        let mut best = 0;
        for i in 1..n {
            if fitnesses[i] < fitnesses[best] {
                best = i;
            }
        }
        return best;
    }
    let mut winner = rng.below(n);
    for _ in 1..k {
        let c = rng.below(n);
        if fitnesses[c] < fitnesses[winner] || (fitnesses[c] == fitnesses[winner] && c < winner) {
            winner = c;
        }
    }
    winner
}

/// Each gene independently perturbed with probability `rate` by a
/// gaussian whose deviation is the span's sigma scaled by the gene's
/// bound width, then clamped back into bounds. Relative sigmas keep one
/// number per span meaningful across genes with very different ranges.
pub fn mutate(g: &Genome, rate: f64, sigma_per_span: &[f64], rng: &mut RngStream) -> Genome {
    assert!(
        sigma_per_span.len() == g.layout.len() || sigma_per_span.len() == 1,
        "one sigma per span (or a single shared sigma) required"
    );
    let mut out = g.clone();
    for (si, span) in g.layout.iter().enumerate() {
        let sigma = sigma_per_span[si.min(sigma_per_span.len() - 1)];
        for (k, (lo, hi)) in span.bounds.iter().enumerate() {
            let i = span.start + k;
            if rng.uniform01() < rate {
                let sd = sigma * (hi - lo);
                out.genes[i] = (g.genes[i] + rng.gaussian(0.0, sd)).clamp(*lo, *hi);
            }
        }
    }
    out
}

/// BLX-α: each child gene drawn uniformly from the parents' interval
/// expanded by α times its width, clamped to the gene bounds.
pub fn blend_crossover(a: &Genome, b: &Genome, alpha: f64, rng: &mut RngStream) -> Result<Genome> {
    if a.layout != b.layout {
        return Err(Error::InvalidInput(
            "blend_crossover requires identical layouts".into(),
        ));
    }
    let mut out = a.clone();
    for i in 0..a.genes.len() {
        let lo = a.genes[i].min(b.genes[i]);
        let hi = a.genes[i].max(b.genes[i]);
        let r = hi - lo;
        let (blo, bhi) = a.bounds_of(i);
        out.genes[i] = rng
            .uniform(lo - alpha * r, hi + alpha * r)
            .clamp(blo, bhi);
    }
    Ok(out)
}

/// Run the generational loop: evaluate everyone, keep the `elitism` best
/// untouched (their fitness is cached, not recomputed), refill the rest
/// by tournament → optional crossover → mutation. Returns the best
/// genome of the final generation and the full stats stream (index 0 is
/// the initial population).
///
/// Non-finite fitness values are replaced by [`PENALTY_FITNESS`] so the
/// search continues over degenerate genomes. Evaluation runs in
/// parallel; determinism is preserved by keying every evaluation and
/// every bred child to its own `(seed, generation, index)` stream.
pub fn evolve<I, F>(mut init: I, fitness: F, cfg: &EAConfig) -> Result<(Genome, Vec<GenerationStats>)>
where
    I: FnMut(&mut RngStream) -> Genome,
    F: Fn(&Genome, &mut RngStream) -> f64 + Sync,
{
    cfg.validate()?;
    let mut live = cfg.clone();

    let mut pop: Vec<Genome> = (0..live.population_size)
        .map(|i| {
            let mut rng = RngStream::for_individual(cfg.seed, 0, VARIATION_BASE + i as u64);
            init(&mut rng)
        })
        .collect();
    let layout = pop[0].layout.clone();
    for g in &pop {
        g.validate()?;
        if g.layout != layout {
            return Err(Error::InvalidInput(
                "init produced genomes with differing layouts".into(),
            ));
        }
    }
    if cfg.mutation_sigma.len() != layout.len() && cfg.mutation_sigma.len() != 1 {
        return Err(Error::InvalidInput(format!(
            "{} mutation sigmas for {} spans",
            cfg.mutation_sigma.len(),
            layout.len()
        )));
    }

    let mut fit: Vec<Option<f64>> = vec![None; pop.len()];
    let mut log: Vec<GenerationStats> = Vec::with_capacity(cfg.generations + 1);

    for gen in 0..=cfg.generations {
        evaluate_missing(&pop, &mut fit, &fitness, cfg.seed, gen as u64);
        let values: Vec<f64> = fit.iter().map(|f| f.expect("evaluated")).collect();
        let stats = summarize(gen, &values, &live);
        log.push(stats.clone());

        if stats.best < cfg.stop_tolerance || gen == cfg.generations {
            break;
        }

        // The controller needs a previous best; it engages once two
        // generations of statistics exist.
        if live.adapter == Adapter::FuzzyController && gen >= 1 {
            let prev_best = log[log.len() - 2].best;
            let out = controller_step(&stats, prev_best);
            live = apply_outputs(&live, &out);
        }

        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| {
            values[a]
                .partial_cmp(&values[b])
                .expect("finite fitness")
                .then(a.cmp(&b))
        });

        let mut next = Vec::with_capacity(live.population_size);
        let mut next_fit = Vec::with_capacity(live.population_size);
        for &e in order.iter().take(live.elitism) {
            next.push(pop[e].clone());
            next_fit.push(Some(values[e]));
        }
        for c in 0..live.population_size - live.elitism {
            let mut rng =
                RngStream::for_individual(cfg.seed, gen as u64 + 1, VARIATION_BASE + c as u64);
            let p1 = tournament_select(&values, live.tournament_k, &mut rng);
            let mut child = if rng.uniform01() < live.crossover_rate {
                let p2 = tournament_select(&values, live.tournament_k, &mut rng);
                blend_crossover(&pop[p1], &pop[p2], ENGINE_BLX_ALPHA, &mut rng)?
            } else {
                pop[p1].clone()
            };
            child = mutate(&child, live.mutation_rate, &live.mutation_sigma, &mut rng);
            next.push(child);
            next_fit.push(None);
        }
        pop = next;
        fit = next_fit;
    }

    let values: Vec<f64> = fit.iter().map(|f| f.expect("evaluated")).collect();
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] < values[best] {
            best = i;
        }
    }
    Ok((pop[best].clone(), log))
}

fn evaluate_missing<F>(pop: &[Genome], fit: &mut [Option<f64>], fitness: &F, seed: u64, gen: u64)
where
    F: Fn(&Genome, &mut RngStream) -> f64 + Sync,
{
    let missing: Vec<usize> = (0..pop.len()).filter(|&i| fit[i].is_none()).collect();
    let computed: Vec<(usize, f64)> = missing
        .par_iter()
        .map(|&i| {
            let mut rng = RngStream::for_individual(seed, gen, i as u64);
            let f = fitness(&pop[i], &mut rng);
            (i, if f.is_finite() { f } else { PENALTY_FITNESS })
        })
        .collect();
    for (i, f) in computed {
        fit[i] = Some(f);
    }
}

fn summarize(gen: usize, values: &[f64], live: &EAConfig) -> GenerationStats {
    let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let worst = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let average = values.iter().sum::<f64>() / values.len() as f64;
    GenerationStats {
        generation: gen,
        best,
        average,
        worst,
        population_size: values.len(),
        mutation_rate: live.mutation_rate,
        crossover_rate: live.crossover_rate,
        penalized: values.iter().filter(|v| **v >= PENALTY_FITNESS).count(),
    }
}
