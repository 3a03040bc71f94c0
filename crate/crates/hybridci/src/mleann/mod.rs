//! Meta-learning evolutionary ANN: a genome spans the learning algorithm
//! and its parameters (lr), the architecture and transfer functions
//! (ar), and the initial weights of a maximal network (wt). Fitness
//! decodes the genome, runs the genome's own trainer on the training
//! split, and scores the result on a held-out split, so the evolutionary
//! layer searches over whole training setups while the local search does
//! the fine tuning.
//!
//! The wt span always holds weights for the maximal [d, H, H, m]
//! architecture (H = max_hidden). Decoding copies the leading rows and
//! columns of each weight block, plus the bias column, down to the
//! decoded sizes; genes outside that mask carry no fitness influence.

use serde::{Deserialize, Serialize};

use crate::data::{rmse, Dataset};
use crate::error::{Error, Result};
use crate::evolution::{
    evolve, gene_bin, round_half_down, EAConfig, GenerationStats, Genome, Span, PENALTY_FITNESS,
};
use crate::mlp::{MLPNetwork, Transfer};
use crate::trainers::{train, TrainAlgorithm, TrainerConfig};

/// Which split the evolutionary fitness is scored on. Scoring on the
/// test split reproduces the original protocol verbatim but leaks test
/// data into the search; validation is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessSplit {
    #[default]
    Valid,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MLEANNConfig {
    pub ea: EAConfig,
    pub max_hidden: usize,
    /// Bounds of the per-genome training epoch budget gene.
    pub epoch_budget: (usize, usize),
    pub fitness_split: FitnessSplit,
}

impl Default for MLEANNConfig {
    fn default() -> Self {
        MLEANNConfig {
            ea: EAConfig {
                population_size: 30,
                generations: 40,
                mutation_rate: 0.3,
                // Time scales, slowest to fastest: learning params,
                // architecture, weights.
                mutation_sigma: vec![0.02, 0.05, 0.10],
                crossover_rate: 0.0,
                ..EAConfig::default()
            },
            max_hidden: 16,
            epoch_budget: (10, 200),
            fitness_split: FitnessSplit::Valid,
        }
    }
}

impl MLEANNConfig {
    pub fn validate(&self) -> Result<()> {
        self.ea.validate()?;
        if self.max_hidden < 1 {
            return Err(Error::InvalidInput("max_hidden must be >= 1".into()));
        }
        let (lo, hi) = self.epoch_budget;
        if lo < 1 || lo > hi {
            return Err(Error::InvalidInput(format!(
                "epoch budget ({}, {}) is not a valid range",
                lo, hi
            )));
        }
        let n_sigma = self.ea.mutation_sigma.len();
        if n_sigma != 3 && n_sigma != 1 {
            return Err(Error::InvalidInput(
                "mleann needs one mutation sigma per span (lr, ar, wt) or a single shared one"
                    .into(),
            ));
        }
        Ok(())
    }
}

// Categorical gene orders, frozen: the span midpoint decodes to the
// documented default (BP, tanh).
const ALGORITHMS: [TrainAlgorithm; 4] = [
    TrainAlgorithm::SCG,
    TrainAlgorithm::BP,
    TrainAlgorithm::QNA,
    TrainAlgorithm::LM,
];
const TRANSFERS: [Transfer; 3] = [Transfer::Sigmoid, Transfer::Tanh, Transfer::Gaussian];

/// Genome layout for `d` inputs and `m` outputs.
pub fn mleann_layout(
    d: usize,
    m: usize,
    max_hidden: usize,
    epoch_budget: (usize, usize),
) -> Vec<Span> {
    let h = max_hidden;
    let lr = vec![
        (0.0, (ALGORITHMS.len() - 1) as f64),
        (1e-4, 1.0),
        (0.0, 0.95),
        (1e-6, 1.0),
        (epoch_budget.0 as f64, epoch_budget.1 as f64),
    ];
    let ar = vec![
        (1.0, 2.0),
        (1.0, h as f64),
        (1.0, h as f64),
        (0.0, (TRANSFERS.len() - 1) as f64),
        (0.0, (TRANSFERS.len() - 1) as f64),
    ];
    let wt_len = h * (d + 1) + h * (h + 1) + m * (h + 1);
    vec![
        Span {
            name: "lr".into(),
            start: 0,
            bounds: lr,
        },
        Span {
            name: "ar".into(),
            start: 5,
            bounds: ar,
        },
        Span {
            name: "wt".into(),
            start: 10,
            bounds: vec![(-1.0, 1.0); wt_len],
        },
    ]
}

/// Decode a genome into a network plus the trainer that fitness will run
/// on it. Total: every in-bounds gene vector yields a valid pair.
pub fn decode(g: &Genome, d: usize, m: usize) -> (MLPNetwork, TrainerConfig) {
    let lr = g.genes_of("lr").expect("mleann genome has an lr span");
    let ar = g.genes_of("ar").expect("mleann genome has an ar span");
    let wt = g.genes_of("wt").expect("mleann genome has a wt span");
    let h = g.span("ar").unwrap().bounds[1].1 as usize;
    debug_assert_eq!(wt.len(), h * (d + 1) + h * (h + 1) + m * (h + 1));

    let tcfg = TrainerConfig {
        algorithm: ALGORITHMS[gene_bin(lr[0], ALGORITHMS.len())],
        learning_rate: lr[1],
        momentum: lr[2],
        lm_lambda0: lr[3],
        epochs: round_half_down(lr[4]).max(1.0) as usize,
        ..TrainerConfig::default()
    };

    let n_hidden = gene_bin(ar[0] - 1.0, 2) + 1;
    let h1 = gene_bin(ar[1] - 1.0, h) + 1;
    let h2 = gene_bin(ar[2] - 1.0, h) + 1;
    let t1 = TRANSFERS[gene_bin(ar[3], TRANSFERS.len())];
    let t2 = TRANSFERS[gene_bin(ar[4], TRANSFERS.len())];

    let (sizes, transfers): (Vec<usize>, Vec<Transfer>) = if n_hidden == 1 {
        (vec![d, h1, m], vec![t1])
    } else {
        (vec![d, h1, h2, m], vec![t1, t2])
    };
    let mut net = MLPNetwork::new(&sizes, &transfers).expect("decoded sizes are positive");

    // Maximal block offsets within the wt span.
    let b0 = 0;
    let b1 = h * (d + 1);
    let b2 = b1 + h * (h + 1);
    let copy = |net_w: &mut crate::numeric::Matrix, block: &[f64], max_cols: usize| {
        for r in 0..net_w.rows() {
            let row = &block[r * (max_cols + 1)..(r + 1) * (max_cols + 1)];
            for c in 0..net_w.cols() - 1 {
                net_w.set(r, c, row[c]);
            }
            // Bias lives in the last column of the maximal row.
            net_w.set(r, net_w.cols() - 1, row[max_cols]);
        }
    };
    copy(&mut net.weights[0], &wt[b0..b1], d);
    if n_hidden == 2 {
        copy(&mut net.weights[1], &wt[b1..b2], h);
        copy(&mut net.weights[2], &wt[b2..], h);
    } else {
        copy(&mut net.weights[1], &wt[b2..], h);
    }
    (net, tcfg)
}

/// Inverse of [`decode`] up to masked genes, which are filled with
/// neutral values. Fails when the network or trainer does not fit the
/// gene bounds (too many layers, weights outside [-1, 1], ...).
pub fn encode(
    net: &MLPNetwork,
    tcfg: &TrainerConfig,
    max_hidden: usize,
    epoch_budget: (usize, usize),
) -> Result<Genome> {
    let n_layers = net.layer_sizes.len();
    if !(3..=4).contains(&n_layers) {
        return Err(Error::InvalidInput(
            "mleann encodes networks with 1 or 2 hidden layers".into(),
        ));
    }
    let d = net.input_width();
    let m = net.output_width();
    let h = max_hidden;
    let n_hidden = n_layers - 2;
    if net.layer_sizes[1..n_layers - 1].iter().any(|&s| s > h) {
        return Err(Error::InvalidInput("hidden layer exceeds max_hidden".into()));
    }

    let algorithm = ALGORITHMS
        .iter()
        .position(|a| *a == tcfg.algorithm)
        .expect("all algorithms are encodable") as f64;
    let transfer_gene = |t: Transfer| {
        TRANSFERS
            .iter()
            .position(|x| *x == t)
            .expect("all transfers are encodable") as f64
    };

    let mut genes = vec![
        algorithm,
        tcfg.learning_rate,
        tcfg.momentum,
        tcfg.lm_lambda0,
        tcfg.epochs as f64,
    ];
    let h1 = net.layer_sizes[1];
    let h2 = if n_hidden == 2 { net.layer_sizes[2] } else { 0 };
    genes.push(n_hidden as f64);
    genes.push(h1 as f64);
    genes.push(if n_hidden == 2 {
        h2 as f64
    } else {
        (1 + h) as f64 / 2.0
    });
    genes.push(transfer_gene(net.transfers[0]));
    genes.push(if n_hidden == 2 {
        transfer_gene(net.transfers[1])
    } else {
        1.0
    });

    let mut wt = vec![0.0; h * (d + 1) + h * (h + 1) + m * (h + 1)];
    let b1 = h * (d + 1);
    let b2 = b1 + h * (h + 1);
    let paste = |block: &mut [f64], w: &crate::numeric::Matrix, max_cols: usize| {
        for r in 0..w.rows() {
            for c in 0..w.cols() - 1 {
                block[r * (max_cols + 1) + c] = w.get(r, c);
            }
            block[r * (max_cols + 1) + max_cols] = w.get(r, w.cols() - 1);
        }
    };
    paste(&mut wt[..b1], &net.weights[0], d);
    if n_hidden == 2 {
        paste(&mut wt[b1..b2], &net.weights[1], h);
        paste(&mut wt[b2..], &net.weights[2], h);
    } else {
        paste(&mut wt[b2..], &net.weights[1], h);
    }
    genes.extend_from_slice(&wt);

    Genome::new(genes, mleann_layout(d, m, max_hidden, epoch_budget))
}

/// Decode, train with the genome's own setup, and score on the
/// evaluation split. Any failure (divergence, overflow) returns the
/// penalty fitness so evolution continues.
pub fn mleann_fitness(g: &Genome, train_ds: &Dataset, eval_ds: &Dataset) -> f64 {
    let (net, tcfg) = decode(g, train_ds.input_width(), train_ds.target_width());
    let Ok(report) = train(&net, train_ds, &tcfg) else {
        return PENALTY_FITNESS;
    };
    let Ok(pred) = report.final_net.forward_batch(&eval_ds.inputs) else {
        return PENALTY_FITNESS;
    };
    match rmse(&pred, &eval_ds.targets) {
        Ok(r) if r.is_finite() => r,
        _ => PENALTY_FITNESS,
    }
}

/// Everything a finished search produces: the winning genome, its
/// trained network, and the scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MLEANNRun {
    pub genome: Genome,
    pub network: MLPNetwork,
    pub trainer: TrainerConfig,
    pub stats: Vec<GenerationStats>,
    pub valid_rmse: f64,
    pub test_rmse: f64,
}

/// Full meta-learning run: evolve over (train, fitness split), then
/// train the best genome once more and score it on all held-out splits.
pub fn mleann_run(
    cfg: &MLEANNConfig,
    train_ds: &Dataset,
    valid_ds: &Dataset,
    test_ds: &Dataset,
) -> Result<MLEANNRun> {
    cfg.validate()?;
    for ds in [valid_ds, test_ds] {
        if ds.input_width() != train_ds.input_width()
            || ds.target_width() != train_ds.target_width()
        {
            return Err(Error::InvalidInput(
                "mleann: split shapes are inconsistent".into(),
            ));
        }
    }
    let d = train_ds.input_width();
    let m = train_ds.target_width();
    let layout = mleann_layout(d, m, cfg.max_hidden, cfg.epoch_budget);
    let eval_ds = match cfg.fitness_split {
        FitnessSplit::Valid => valid_ds,
        FitnessSplit::Test => test_ds,
    };
    let (best, stats) = evolve(
        |rng| Genome::random(&layout, rng),
        |g, _| mleann_fitness(g, train_ds, eval_ds),
        &cfg.ea,
    )?;

    let (net, tcfg) = decode(&best, d, m);
    let network = match train(&net, train_ds, &tcfg) {
        Ok(report) => report.final_net,
        // A divergent winner means every genome was penalized; report
        // the untrained network rather than failing the run.
        Err(_) => net,
    };
    let score = |ds: &Dataset| -> f64 {
        network
            .forward_batch(&ds.inputs)
            .ok()
            .and_then(|p| rmse(&p, &ds.targets).ok())
            .unwrap_or(f64::INFINITY)
    };
    let valid_rmse = score(valid_ds);
    let test_rmse = score(test_ds);
    Ok(MLEANNRun {
        genome: best,
        network,
        trainer: tcfg,
        stats,
        valid_rmse,
        test_rmse,
    })
}
