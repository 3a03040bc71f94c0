//! Run artifacts: the JSON run record, plot-ready CSV renderings, and
//! atomic file writes. A record echoes the fully resolved config, so
//! re-running it reproduces every fitness number bit-exactly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::data::format_csv;
use crate::error::{Error, Result};
use crate::evolution::GenerationStats;

/// Per-generation or per-epoch progress, depending on the task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum History {
    Generations(Vec<GenerationStats>),
    /// Loss after each accepted epoch, initial value first.
    Epochs(Vec<f64>),
}

impl History {
    /// CSV rendering: one row per generation or epoch.
    pub fn to_csv(&self) -> String {
        match self {
            History::Generations(stats) => {
                let header = [
                    "generation",
                    "best",
                    "average",
                    "worst",
                    "population_size",
                    "mutation_rate",
                    "crossover_rate",
                    "penalized",
                ];
                let rows: Vec<Vec<f64>> = stats
                    .iter()
                    .map(|s| {
                        vec![
                            s.generation as f64,
                            s.best,
                            s.average,
                            s.worst,
                            s.population_size as f64,
                            s.mutation_rate,
                            s.crossover_rate,
                            s.penalized as f64,
                        ]
                    })
                    .collect();
                format_csv(Some(&header), &rows)
            }
            History::Epochs(losses) => {
                let rows: Vec<Vec<f64>> = losses
                    .iter()
                    .enumerate()
                    .map(|(i, l)| vec![i as f64, *l])
                    .collect();
                format_csv(Some(&["epoch", "loss"]), &rows)
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            History::Generations(s) => s.is_empty(),
            History::Epochs(l) => l.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub toolkit_version: String,
    /// Final path component of the output directory; compare rows use it.
    pub name: String,
    /// Fully resolved config; re-running it reproduces the run.
    pub config: ExperimentConfig,
    /// Hex FNV-1a fingerprint of the assembled dataset, absent for tasks
    /// without one.
    pub dataset_fingerprint: Option<String>,
    pub history: History,
    /// Task-specific model serialization (network, fuzzy system, genome).
    pub model: serde_json::Value,
    pub param_count: usize,
    pub train_rmse: Option<f64>,
    pub valid_rmse: Option<f64>,
    pub test_rmse: Option<f64>,
    pub duration_seconds: f64,
    pub diverged: bool,
}

impl RunRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("run.json");
        let text = std::fs::read_to_string(&path).map_err(|e| {
            Error::Config(format!("cannot read {}: {}", path.display(), e))
        })?;
        Self::from_json(&text)
    }
}

/// Write-temp-then-rename so readers never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = PathBuf::from(path);
    let mut ext = tmp.extension().unwrap_or_default().to_os_string();
    ext.push(".tmp");
    tmp.set_extension(ext);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// One comparison row extracted from a run record.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub name: String,
    pub test_rmse: f64,
    pub param_count: usize,
    pub duration_seconds: f64,
}

/// Build the comparison table from run directories: one row per run,
/// sorted ascending by test RMSE. All records must score the same
/// dataset, checked by fingerprint.
pub fn compare_records(records: &[RunRecord]) -> Result<Vec<CompareRow>> {
    if records.len() < 2 {
        return Err(Error::InvalidInput(
            "compare needs at least two run records".into(),
        ));
    }
    let fp = records[0].dataset_fingerprint.as_deref();
    for r in records {
        let this = r.dataset_fingerprint.as_deref();
        if this.is_none() || this != fp {
            return Err(Error::InvalidInput(format!(
                "dataset fingerprints differ: {} has {:?}, {} has {:?}",
                records[0].name, fp, r.name, this
            )));
        }
    }
    let mut rows: Vec<CompareRow> = records
        .iter()
        .map(|r| {
            let rmse = r.test_rmse.ok_or_else(|| {
                Error::InvalidInput(format!("run {} has no test RMSE", r.name))
            })?;
            Ok(CompareRow {
                name: r.name.clone(),
                test_rmse: rmse,
                param_count: r.param_count,
                duration_seconds: r.duration_seconds,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| {
        a.test_rmse
            .total_cmp(&b.test_rmse)
            .then_with(|| a.name.cmp(&b.name))
    });
    Ok(rows)
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("name,test_rmse,param_count,duration_seconds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.name, r.test_rmse, r.param_count, r.duration_seconds
        ));
    }
    out
}

/// Aligned text table for terminals.
pub fn compare_table(rows: &[CompareRow]) -> String {
    let name_w = rows
        .iter()
        .map(|r| r.name.len())
        .chain(["name".len()])
        .max()
        .unwrap();
    let mut out = format!(
        "{:<name_w$}  {:>12}  {:>8}  {:>10}\n",
        "name", "test_rmse", "params", "seconds"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<name_w$}  {:>12.6}  {:>8}  {:>10.3}\n",
            r.name, r.test_rmse, r.param_count, r.duration_seconds
        ));
    }
    out
}
