//! EvoNF: evolutionary optimization of complete fuzzy inference systems.
//! One flat genome carries the FIS type, the fuzzy operators, the rule
//! base, the membership functions, and the neuro-fuzzy learning
//! parameters; fitness decodes the genome, trains it on the training
//! split, and scores it on a held-out split. Each genome is a full
//! knowledge base, so fitness never depends on other population members.
//!
//! The intended time scales (membership functions adapt fastest, then
//! the rule base, then operators, then the FIS type) are realized by
//! per-span mutation sigmas rather than nested evolutionary loops.
//!
//! Membership genes are offsets from the uniform grid skeleton, so the
//! all-midpoints genome decodes to the plain grid-partition system. A
//! Takagi-Sugeno decode keeps the triangular skeleton shape; a Mamdani
//! decode maps the same genes onto gaussians (the Mamdani trainer needs
//! them), matched so both cross 0.5 at the same half-width.

use serde::{Deserialize, Serialize};

use crate::data::{rmse, Dataset};
use crate::error::{Error, Result};
use crate::evolution::{
    evolve, gene_bin, round_half_down, EAConfig, GenerationStats, Genome, Span, PENALTY_FITNESS,
};
use crate::fuzzy::{
    uniform_triangles, Defuzz, FisKind, FuzzyRule, FuzzySystem, FuzzyVariable, MembershipFn,
    MfKind, RuleConsequent, TConorm, TNorm,
};
use crate::mleann::FitnessSplit;
use crate::neurofuzzy::{gradient_train_mamdani, hybrid_train_ts, NFTrainConfig};

// Categorical gene orders, frozen: midpoints decode to the grid-partition
// defaults (Takagi-Sugeno, product, max, centroid).
const FIS_KINDS: [FisKind; 2] = [FisKind::TakagiSugeno, FisKind::Mamdani];
const TNORMS: [TNorm; 2] = [TNorm::Product, TNorm::Min];
const TCONORMS: [TConorm; 2] = [TConorm::Max, TConorm::ProbabilisticSum];
const DEFUZZ: [Defuzz; 2] = [Defuzz::Centroid, Defuzz::MeanOfMaxima];

/// Rule-base cells above this are refused at layout time.
const MAX_RULE_CELLS: usize = 1 << 20;

/// How much of the decoded system the neuro-fuzzy trainer may touch
/// inside fitness evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningStrategy {
    /// Score the decoded system as-is.
    NoTuning,
    /// Least-squares consequents only; antecedents stay as decoded.
    /// Mamdani systems have no separable consequent stage and are
    /// scored as-is under this strategy.
    ConsequentsOnly,
    #[default]
    FullHybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvoNFConfig {
    pub ea: EAConfig,
    pub terms_per_var: usize,
    pub fitness_split: FitnessSplit,
    /// Pin the FIS-type gene, shrinking the search space.
    pub fix_fis_type: Option<FisKind>,
    /// Pin the operator genes to product/max/centroid.
    pub fix_operators: bool,
    pub learning_strategy: LearningStrategy,
}

impl Default for EvoNFConfig {
    fn default() -> Self {
        EvoNFConfig {
            ea: EAConfig {
                population_size: 30,
                generations: 40,
                mutation_rate: 0.3,
                // Time scales, slowest to fastest: FIS type, operators,
                // rule base, membership functions; learning params sit
                // with the rule base.
                mutation_sigma: vec![0.01, 0.02, 0.05, 0.10, 0.05],
                crossover_rate: 0.0,
                ..EAConfig::default()
            },
            terms_per_var: 3,
            fitness_split: FitnessSplit::Valid,
            fix_fis_type: None,
            fix_operators: false,
            learning_strategy: LearningStrategy::FullHybrid,
        }
    }
}

impl EvoNFConfig {
    pub fn validate(&self) -> Result<()> {
        self.ea.validate()?;
        if self.terms_per_var < 2 {
            return Err(Error::InvalidInput("terms_per_var must be >= 2".into()));
        }
        let n_sigma = self.ea.mutation_sigma.len();
        if n_sigma != 5 && n_sigma != 1 {
            return Err(Error::InvalidInput(
                "evonf needs one mutation sigma per span (fis_type, operators, rules, mf, \
                 learning) or a single shared one"
                    .into(),
            ));
        }
        Ok(())
    }
}

fn check_universe(u: (f64, f64)) -> Result<()> {
    if !(u.0.is_finite() && u.1.is_finite() && u.0 < u.1) {
        return Err(Error::InvalidInput(format!(
            "universe ({}, {}) is not a proper interval",
            u.0, u.1
        )));
    }
    Ok(())
}

/// Genome layout over the given variable universes. Fixing the FIS type
/// or the operators pins those genes with degenerate bounds, so neither
/// initialization nor mutation can move them.
pub fn evonf_layout(
    input_universes: &[(f64, f64)],
    output_universe: (f64, f64),
    terms_per_var: usize,
    fix_fis_type: Option<FisKind>,
    fix_operators: bool,
) -> Result<Vec<Span>> {
    if input_universes.is_empty() {
        return Err(Error::InvalidInput("evonf needs at least one input".into()));
    }
    if terms_per_var < 2 {
        return Err(Error::InvalidInput("terms_per_var must be >= 2".into()));
    }
    for &u in input_universes.iter().chain([&output_universe]) {
        check_universe(u)?;
    }
    let d = input_universes.len();
    let k = terms_per_var;
    let cells = k
        .checked_pow(d as u32)
        .filter(|&c| c <= MAX_RULE_CELLS)
        .ok_or_else(|| Error::InvalidInput("rule grid too large".into()))?;

    let fis_bounds = match fix_fis_type {
        None => vec![(0.0, 1.0)],
        Some(kind) => {
            let v = FIS_KINDS.iter().position(|x| *x == kind).unwrap() as f64;
            vec![(v, v)]
        }
    };
    let op_bounds = if fix_operators {
        vec![(0.0, 0.0); 3]
    } else {
        vec![(0.0, 1.0); 3]
    };
    // Per cell: activity flag, Mamdani consequent term.
    let mut rule_bounds = Vec::with_capacity(2 * cells);
    for _ in 0..cells {
        rule_bounds.push((0.0, 1.0));
        rule_bounds.push((0.0, (k - 1) as f64));
    }
    // Per term: apex offset, half-width offset, both within half a grid
    // step so neighborhoods stay ordered and widths stay positive.
    let mut mf_bounds = Vec::with_capacity((d + 1) * k * 2);
    for &(lo, hi) in input_universes.iter().chain([&output_universe]) {
        let half_step = 0.5 * (hi - lo) / (k - 1) as f64;
        for _ in 0..k {
            mf_bounds.push((-half_step, half_step));
            mf_bounds.push((-half_step, half_step));
        }
    }
    let learn_bounds = vec![(1.0, 50.0), (1e-4, 0.5), (0.0, 1e-2)];

    let mut spans = Vec::with_capacity(5);
    let mut start = 0;
    for (name, bounds) in [
        ("fis_type", fis_bounds),
        ("operators", op_bounds),
        ("rules", rule_bounds),
        ("mf", mf_bounds),
        ("learning", learn_bounds),
    ] {
        let len = bounds.len();
        spans.push(Span {
            name: name.into(),
            start,
            bounds,
        });
        start += len;
    }
    Ok(spans)
}

/// Gaussian sigma per unit of triangular half-width, matched so both
/// shapes cross 0.5 at the same distance from the apex.
fn gauss_sigma(half_width: f64) -> f64 {
    half_width / (8.0 * std::f64::consts::LN_2).sqrt()
}

/// Decode a genome into a runnable system plus the learning parameters
/// its fitness evaluation will use. Total: every in-bounds gene vector
/// yields a valid system. Term labels are regenerated from the grid
/// skeleton; Takagi-Sugeno consequents start at zero (the consequent
/// estimation inside fitness owns them).
pub fn decode_fis(
    g: &Genome,
    input_universes: &[(f64, f64)],
    output_universe: (f64, f64),
) -> (FuzzySystem, NFTrainConfig) {
    let d = input_universes.len();
    let ft = g.genes_of("fis_type").expect("evonf genome has a fis_type span");
    let ops = g.genes_of("operators").expect("evonf genome has an operators span");
    let rule_g = g.genes_of("rules").expect("evonf genome has a rules span");
    let mf_g = g.genes_of("mf").expect("evonf genome has an mf span");
    let learn = g.genes_of("learning").expect("evonf genome has a learning span");
    let k = mf_g.len() / ((d + 1) * 2);
    let cells = rule_g.len() / 2;
    debug_assert_eq!(cells, k.pow(d as u32));

    let kind = FIS_KINDS[gene_bin(ft[0], 2)];
    let variable = |universe: (f64, f64), name: String, genes: &[f64]| -> FuzzyVariable {
        let (lo, hi) = universe;
        let step = (hi - lo) / (k - 1) as f64;
        let skeleton = uniform_triangles(universe, k).expect("universes checked at layout time");
        let terms = skeleton
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let base = lo + i as f64 * step;
                // Widened clamp keeps the zero-offset apex bit-exact even
                // when lo + (k-1)*step drifts past hi by an ulp.
                let apex = (base + genes[2 * i]).clamp(lo.min(base), hi.max(base));
                let hw = step + genes[2 * i + 1];
                let mf = match kind {
                    FisKind::TakagiSugeno => MfKind::Triangular {
                        a: apex - hw,
                        b: apex,
                        c: apex + hw,
                    },
                    FisKind::Mamdani => MfKind::Gaussian {
                        center: apex,
                        sigma: gauss_sigma(hw),
                    },
                };
                MembershipFn::new(mf, t.label.clone()).expect("decoded parameters stay ordered")
            })
            .collect();
        FuzzyVariable {
            name,
            universe,
            terms,
        }
    };

    let inputs: Vec<FuzzyVariable> = input_universes
        .iter()
        .enumerate()
        .map(|(i, &u)| variable(u, format!("x{}", i + 1), &mf_g[2 * k * i..2 * k * (i + 1)]))
        .collect();
    let output = match kind {
        FisKind::Mamdani => Some(variable(
            output_universe,
            "y".into(),
            &mf_g[2 * k * d..],
        )),
        FisKind::TakagiSugeno => None,
    };

    let make_rule = |cell: usize| -> FuzzyRule {
        let mut antecedent = Vec::with_capacity(d);
        let mut rest = cell;
        for _ in 0..d {
            antecedent.push(Some(rest % k));
            rest /= k;
        }
        let consequent = match kind {
            FisKind::TakagiSugeno => RuleConsequent::Linear {
                coeffs: vec![0.0; d],
                offset: 0.0,
            },
            FisKind::Mamdani => RuleConsequent::OutputTerm(gene_bin(rule_g[2 * cell + 1], k)),
        };
        FuzzyRule {
            antecedent,
            consequent,
            weight: 1.0,
        }
    };
    let mut rules = Vec::new();
    let mut top = (0usize, f64::NEG_INFINITY);
    for cell in 0..cells {
        let flag = rule_g[2 * cell];
        if flag > top.1 {
            top = (cell, flag);
        }
        if flag >= 0.5 {
            rules.push(make_rule(cell));
        }
    }
    // At least one rule survives decoding.
    if rules.is_empty() {
        rules.push(make_rule(top.0));
    }

    let fs = FuzzySystem {
        kind,
        inputs,
        output,
        rules,
        tnorm: TNORMS[gene_bin(ops[0], 2)],
        tconorm: TCONORMS[gene_bin(ops[1], 2)],
        defuzz: DEFUZZ[gene_bin(ops[2], 2)],
    };
    let nf = NFTrainConfig {
        epochs: round_half_down(learn[0]).max(1.0) as usize,
        antecedent_lr: learn[1],
        ridge: learn[2],
        freeze_antecedents: false,
    };
    (fs, nf)
}

/// Inverse of [`decode_fis`] onto the unrestricted layout. The system
/// must sit on a `terms_per_var` grid skeleton: symmetric triangles for
/// Takagi-Sugeno, gaussians for Mamdani, rule antecedents on grid cells,
/// unit rule weights. Takagi-Sugeno linear consequents and the
/// `freeze_antecedents` flag are not genome-encoded. Out-of-range
/// parameters are errors, not clamps.
pub fn encode_fis(
    fs: &FuzzySystem,
    nf: &NFTrainConfig,
    output_universe: (f64, f64),
) -> Result<Genome> {
    fs.validate()?;
    if nf.freeze_antecedents {
        return Err(Error::InvalidInput(
            "freeze_antecedents is a strategy, not a gene".into(),
        ));
    }
    let d = fs.inputs.len();
    let k = fs.inputs[0].terms.len();
    if k < 2 || fs.inputs.iter().any(|v| v.terms.len() != k) {
        return Err(Error::InvalidInput(
            "encode_fis needs the same term count (>= 2) on every variable".into(),
        ));
    }
    let out_universe = fs.output.as_ref().map_or(output_universe, |v| v.universe);
    let input_universes: Vec<(f64, f64)> = fs.inputs.iter().map(|v| v.universe).collect();
    let layout = evonf_layout(&input_universes, out_universe, k, None, false)?;

    let fis_gene = FIS_KINDS.iter().position(|x| *x == fs.kind).unwrap() as f64;
    let op_genes = [
        TNORMS.iter().position(|x| *x == fs.tnorm).unwrap() as f64,
        TCONORMS.iter().position(|x| *x == fs.tconorm).unwrap() as f64,
        DEFUZZ.iter().position(|x| *x == fs.defuzz).unwrap() as f64,
    ];

    let cells = k.pow(d as u32);
    let mut rule_genes = Vec::with_capacity(2 * cells);
    for _ in 0..cells {
        rule_genes.push(0.0);
        rule_genes.push((k - 1) as f64 / 2.0);
    }
    for rule in &fs.rules {
        if (rule.weight - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(
                "rule weights are not genome-encoded".into(),
            ));
        }
        let mut cell = 0usize;
        for (j, slot) in rule.antecedent.iter().enumerate().rev() {
            let Some(t) = slot else {
                return Err(Error::InvalidInput(
                    "wildcard antecedents are not grid cells".into(),
                ));
            };
            cell = cell * k + t;
            let _ = j;
        }
        if rule_genes[2 * cell] >= 0.5 {
            return Err(Error::InvalidInput("duplicate rule cell".into()));
        }
        rule_genes[2 * cell] = 1.0;
        match (&rule.consequent, fs.kind) {
            (RuleConsequent::Linear { .. }, FisKind::TakagiSugeno) => {}
            (RuleConsequent::OutputTerm(t), FisKind::Mamdani) => {
                rule_genes[2 * cell + 1] = *t as f64;
            }
            _ => {
                return Err(Error::InvalidInput(
                    "consequent style does not match the FIS kind".into(),
                ));
            }
        }
    }

    let mut mf_genes = Vec::with_capacity((d + 1) * k * 2);
    let mut push_var = |v: &FuzzyVariable| -> Result<()> {
        let (lo, hi) = v.universe;
        let step = (hi - lo) / (k - 1) as f64;
        for (i, t) in v.terms.iter().enumerate() {
            let (apex, hw) = match t.kind {
                MfKind::Triangular { a, b, c } => {
                    if ((b - a) - (c - b)).abs() > 1e-9 * step {
                        return Err(Error::InvalidInput(
                            "asymmetric triangles are not genome-encodable".into(),
                        ));
                    }
                    (b, b - a)
                }
                MfKind::Gaussian { center, sigma } => (center, sigma * (8.0 * std::f64::consts::LN_2).sqrt()),
                _ => {
                    return Err(Error::InvalidInput(
                        "encode_fis handles triangular and gaussian terms only".into(),
                    ));
                }
            };
            mf_genes.push(apex - (lo + i as f64 * step));
            mf_genes.push(hw - step);
        }
        Ok(())
    };
    for v in &fs.inputs {
        push_var(v)?;
    }
    match &fs.output {
        Some(v) => {
            if v.terms.len() != k {
                return Err(Error::InvalidInput(
                    "encode_fis needs the same term count (>= 2) on every variable".into(),
                ));
            }
            push_var(v)?;
        }
        // Takagi-Sugeno: output membership genes are unused; park them
        // at zero offsets.
        None => mf_genes.extend(std::iter::repeat(0.0).take(2 * k)),
    }

    let mut genes = vec![fis_gene];
    genes.extend_from_slice(&op_genes);
    genes.extend_from_slice(&rule_genes);
    genes.extend_from_slice(&mf_genes);
    genes.extend_from_slice(&[nf.epochs as f64, nf.antecedent_lr, nf.ridge]);
    Genome::new(genes, layout)
}

/// Per-column (min, max) over a dataset, padded when degenerate. The
/// genome layout and every fitness decode share these universes.
pub fn data_universes(ds: &Dataset) -> (Vec<(f64, f64)>, (f64, f64)) {
    let column = |m: &crate::numeric::Matrix, j: usize| -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m.rows() {
            lo = lo.min(m.get(i, j));
            hi = hi.max(m.get(i, j));
        }
        if lo < hi {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let inputs = (0..ds.input_width())
        .map(|j| column(&ds.inputs, j))
        .collect();
    (inputs, column(&ds.targets, 0))
}

fn train_decoded(
    fs: FuzzySystem,
    nf: &NFTrainConfig,
    ds: &Dataset,
    strategy: LearningStrategy,
) -> Result<FuzzySystem> {
    match (fs.kind, strategy) {
        (_, LearningStrategy::NoTuning) => Ok(fs),
        (FisKind::Mamdani, LearningStrategy::ConsequentsOnly) => Ok(fs),
        (FisKind::Mamdani, LearningStrategy::FullHybrid) => {
            gradient_train_mamdani(&fs, ds, nf).map(|r| r.system)
        }
        (FisKind::TakagiSugeno, s) => {
            let cfg = NFTrainConfig {
                freeze_antecedents: s == LearningStrategy::ConsequentsOnly,
                ..*nf
            };
            hybrid_train_ts(&fs, ds, &cfg).map(|r| r.system)
        }
    }
}

/// Decode, train with the genome's own learning genes, and score on the
/// evaluation split. Failures return the penalty fitness.
pub fn evonf_fitness(
    g: &Genome,
    train_ds: &Dataset,
    eval_ds: &Dataset,
    strategy: LearningStrategy,
) -> f64 {
    let (input_universes, output_universe) = data_universes(train_ds);
    if input_universes
        .iter()
        .chain([&output_universe])
        .any(|u| check_universe(*u).is_err())
    {
        return PENALTY_FITNESS;
    }
    let (fs, nf) = decode_fis(g, &input_universes, output_universe);
    let Ok(trained) = train_decoded(fs, &nf, train_ds, strategy) else {
        return PENALTY_FITNESS;
    };
    let Ok(pred) = trained.predict_batch(&eval_ds.inputs) else {
        return PENALTY_FITNESS;
    };
    match rmse(&pred, &eval_ds.targets) {
        Ok(r) if r.is_finite() => r,
        _ => PENALTY_FITNESS,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvoNFRun {
    pub genome: Genome,
    pub system: FuzzySystem,
    pub trainer: NFTrainConfig,
    pub stats: Vec<GenerationStats>,
    pub valid_rmse: f64,
    pub test_rmse: f64,
}

/// Full run: evolve over (train, fitness split), then retrain the best
/// genome and score it on the held-out splits.
pub fn evonf_run(
    cfg: &EvoNFConfig,
    train_ds: &Dataset,
    valid_ds: &Dataset,
    test_ds: &Dataset,
) -> Result<EvoNFRun> {
    cfg.validate()?;
    for ds in [train_ds, valid_ds, test_ds] {
        if ds.target_width() != 1 {
            return Err(Error::InvalidInput(
                "evonf models a single output".into(),
            ));
        }
        if ds.input_width() != train_ds.input_width() {
            return Err(Error::InvalidInput(
                "evonf: split shapes are inconsistent".into(),
            ));
        }
    }
    let (input_universes, output_universe) = data_universes(train_ds);
    let layout = evonf_layout(
        &input_universes,
        output_universe,
        cfg.terms_per_var,
        cfg.fix_fis_type,
        cfg.fix_operators,
    )?;
    let eval_ds = match cfg.fitness_split {
        FitnessSplit::Valid => valid_ds,
        FitnessSplit::Test => test_ds,
    };
    let strategy = cfg.learning_strategy;
    let (best, stats) = evolve(
        |rng| Genome::random(&layout, rng),
        |g, _| evonf_fitness(g, train_ds, eval_ds, strategy),
        &cfg.ea,
    )?;

    let (fs, nf) = decode_fis(&best, &input_universes, output_universe);
    let system = match train_decoded(fs.clone(), &nf, train_ds, strategy) {
        Ok(s) => s,
        // A failing winner means every genome was penalized; report the
        // untrained system rather than failing the run.
        Err(_) => fs,
    };
    let score = |ds: &Dataset| -> f64 {
        system
            .predict_batch(&ds.inputs)
            .ok()
            .and_then(|p| rmse(&p, &ds.targets).ok())
            .unwrap_or(f64::INFINITY)
    };
    let valid_rmse = score(valid_ds);
    let test_rmse = score(test_ds);
    Ok(EvoNFRun {
        genome: best,
        system,
        trainer: nf,
        stats,
        valid_rmse,
        test_rmse,
    })
}
