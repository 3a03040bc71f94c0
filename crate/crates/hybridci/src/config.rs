//! Experiment configuration: one JSON document per run. Unknown keys are
//! errors so typos in sweep scripts fail loudly instead of silently
//! falling back to defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{MackeyGlassConfig, SplitSpec};
use crate::error::{Error, Result};
use crate::evolution::EAConfig;
use crate::evonf::EvoNFConfig;
use crate::fuzzy::FisKind;
use crate::mleann::MLEANNConfig;
use crate::mlp::Transfer;
use crate::neurofuzzy::NFTrainConfig;
use crate::trainers::TrainerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    GenSeries,
    TrainNn,
    Mleann,
    Anfis,
    Evonf,
    EaBench,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::GenSeries => "gen-series",
            Task::TrainNn => "train-nn",
            Task::Mleann => "mleann",
            Task::Anfis => "anfis",
            Task::Evonf => "evonf",
            Task::EaBench => "ea-bench",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    MackeyGlass(MackeyGlassConfig),
    Csv {
        path: PathBuf,
        target_cols: usize,
        has_header: bool,
    },
}

/// Delay embedding of a scalar series into a supervised dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub lags: Vec<usize>,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub source: DataSource,
    /// Required for series sources; with a csv source it reads the file
    /// as a single-column series instead of a ready-made table.
    #[serde(default)]
    pub embedding: Option<EmbeddingSpec>,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub normalize: bool,
}

/// Network shape for the train-nn task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub layer_sizes: Vec<usize>,
    pub transfers: Vec<Transfer>,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
}

fn default_init_scale() -> f64 {
    0.5
}

/// Grid-partition neuro-fuzzy model for the anfis task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnfisSpec {
    pub kind: FisKind,
    pub terms_per_var: usize,
    pub train: NFTrainConfig,
}

impl Default for AnfisSpec {
    fn default() -> Self {
        AnfisSpec {
            kind: FisKind::TakagiSugeno,
            terms_per_var: 3,
            train: NFTrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchFunction {
    Sphere,
    Rastrigin,
    Rosenbrock,
}

impl BenchFunction {
    /// Search box per coordinate, the conventional benchmark ranges.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            BenchFunction::Sphere | BenchFunction::Rastrigin => (-5.12, 5.12),
            BenchFunction::Rosenbrock => (-2.048, 2.048),
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            BenchFunction::Sphere => x.iter().map(|v| v * v).sum(),
            BenchFunction::Rastrigin => {
                10.0 * x.len() as f64
                    + x.iter()
                        .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
                        .sum::<f64>()
            }
            BenchFunction::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EaBenchSpec {
    pub function: BenchFunction,
    pub dims: usize,
    #[serde(default)]
    pub ea: EAConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub dataset: Option<DatasetSpec>,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub trainer: Option<TrainerConfig>,
    #[serde(default)]
    pub anfis: Option<AnfisSpec>,
    #[serde(default)]
    pub mleann: Option<MLEANNConfig>,
    #[serde(default)]
    pub evonf: Option<EvoNFConfig>,
    #[serde(default)]
    pub ea_bench: Option<EaBenchSpec>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Structural validation: exactly the sections the task needs, inner
    /// configs valid, referenced files present. Errors name the field.
    pub fn validate(&self) -> Result<()> {
        let sections: [(&str, bool, bool); 6] = [
            ("dataset", self.dataset.is_some(), self.task != Task::EaBench),
            ("model", self.model.is_some(), self.task == Task::TrainNn),
            ("trainer", self.trainer.is_some(), self.task == Task::TrainNn),
            ("anfis", self.anfis.is_some(), self.task == Task::Anfis),
            ("mleann", self.mleann.is_some(), self.task == Task::Mleann),
            ("evonf", self.evonf.is_some(), self.task == Task::Evonf),
        ];
        for (name, present, needed) in sections {
            if needed && !present {
                return Err(Error::Config(format!(
                    "task {} requires a `{}` section",
                    self.task.name(),
                    name
                )));
            }
            if present && !needed {
                return Err(Error::Config(format!(
                    "task {} does not use the `{}` section",
                    self.task.name(),
                    name
                )));
            }
        }
        if self.task == Task::EaBench && self.ea_bench.is_none() {
            return Err(Error::Config(
                "task ea-bench requires an `ea_bench` section".into(),
            ));
        }
        if self.task != Task::EaBench && self.ea_bench.is_some() {
            return Err(Error::Config(format!(
                "task {} does not use the `ea_bench` section",
                self.task.name()
            )));
        }

        if let Some(ds) = &self.dataset {
            match &ds.source {
                DataSource::Csv {
                    path, target_cols, ..
                } => {
                    if !path.is_file() {
                        return Err(Error::Config(format!(
                            "dataset.source.csv.path {} does not exist",
                            path.display()
                        )));
                    }
                    if ds.embedding.is_none() && *target_cols == 0 {
                        return Err(Error::Config(
                            "dataset.source.csv.target_cols must be >= 1".into(),
                        ));
                    }
                }
                DataSource::MackeyGlass(_) => {
                    if self.task != Task::GenSeries && ds.embedding.is_none() {
                        return Err(Error::Config(
                            "dataset.embedding is required for a series source".into(),
                        ));
                    }
                }
            }
            if let Some(e) = &ds.embedding {
                if e.lags.is_empty() {
                    return Err(Error::Config("dataset.embedding.lags is empty".into()));
                }
                if e.horizon == 0 {
                    return Err(Error::Config("dataset.embedding.horizon must be >= 1".into()));
                }
            }
            ds.split
                .validate()
                .map_err(|e| Error::Config(format!("dataset.split: {}", e)))?;
        }
        if let Some(m) = &self.model {
            if m.layer_sizes.len() < 2 || m.layer_sizes.iter().any(|&s| s == 0) {
                return Err(Error::Config(
                    "model.layer_sizes needs >= 2 positive entries".into(),
                ));
            }
            if m.transfers.len() != m.layer_sizes.len() - 2 {
                return Err(Error::Config(
                    "model.transfers needs one entry per hidden layer".into(),
                ));
            }
            if !(m.init_scale.is_finite() && m.init_scale > 0.0) {
                return Err(Error::Config("model.init_scale must be > 0".into()));
            }
        }
        if let Some(t) = &self.trainer {
            t.validate().map_err(|e| Error::Config(format!("trainer: {}", e)))?;
        }
        if let Some(a) = &self.anfis {
            if a.terms_per_var < 2 {
                return Err(Error::Config("anfis.terms_per_var must be >= 2".into()));
            }
            a.train
                .validate()
                .map_err(|e| Error::Config(format!("anfis.train: {}", e)))?;
        }
        if let Some(m) = &self.mleann {
            m.validate().map_err(|e| Error::Config(format!("mleann: {}", e)))?;
        }
        if let Some(e) = &self.evonf {
            e.validate().map_err(|e| Error::Config(format!("evonf: {}", e)))?;
        }
        if let Some(b) = &self.ea_bench {
            if b.dims == 0 {
                return Err(Error::Config("ea_bench.dims must be >= 1".into()));
            }
            b.ea
                .validate()
                .map_err(|e| Error::Config(format!("ea_bench.ea: {}", e)))?;
            if b.ea.mutation_sigma.len() != 1 {
                return Err(Error::Config(
                    "ea_bench.ea.mutation_sigma needs exactly one entry".into(),
                ));
            }
        }
        Ok(())
    }

    /// Push the top-level seed into every nested seed so one number
    /// controls the whole run. The echoed config in the run record is
    /// the resolved one.
    pub fn resolve_seed(&mut self, seed: Option<u64>) {
        if let Some(s) = seed {
            self.seed = s;
        }
        let s = self.seed;
        if let Some(ds) = &mut self.dataset {
            ds.split.seed = s;
        }
        if let Some(m) = &mut self.mleann {
            m.ea.seed = s;
        }
        if let Some(e) = &mut self.evonf {
            e.ea.seed = s;
        }
        if let Some(b) = &mut self.ea_bench {
            b.ea.seed = s;
        }
    }
}
