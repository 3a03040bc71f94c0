//! Task execution: turn a validated config into a run record plus its
//! artifact files (run.json, history.csv, predictions.csv, series.csv).

use std::time::Instant;

use crate::config::{DataSource, DatasetSpec, ExperimentConfig, Task};
use crate::data::{
    embed_series, format_csv, gen_mackey_glass, load_csv, normalize_minmax, parse_csv, rmse,
    split, Dataset,
};
use crate::error::{Error, Result};
use crate::evolution::{evolve, Genome, Span};
use crate::evonf::{data_universes, evonf_run};
use crate::fuzzy::{grid_partition, FisKind, FuzzySystem, FuzzyVariable, MfKind};
use crate::mleann::mleann_run;
use crate::mlp::MLPNetwork;
use crate::neurofuzzy::{gradient_train_mamdani, hybrid_train_ts};
use crate::numeric::{Matrix, RngStream};
use crate::record::{write_atomic, History, RunRecord};
use crate::trainers::train;
use crate::TOOLKIT_VERSION;

const SERIES_HEADER: [&str; 2] = ["t", "x"];

/// Everything a run produces before any file is written.
pub struct RunOutput {
    pub record: RunRecord,
    /// Scalar series for gen-series.
    pub series: Option<Vec<f64>>,
    /// Header and rows for predictions.csv (test inputs, targets,
    /// predictions), absent when there is no test split.
    pub predictions: Option<(Vec<String>, Vec<Vec<f64>>)>,
}

/// Read the configured source as a scalar series. A csv source
/// contributes its last column, so generated (t, x) files feed back in.
pub fn assemble_series(spec: &DatasetSpec) -> Result<Vec<f64>> {
    match &spec.source {
        DataSource::MackeyGlass(mg) => gen_mackey_glass(mg),
        DataSource::Csv {
            path, has_header, ..
        } => {
            let text = std::fs::read_to_string(path)?;
            let rows = parse_csv(&text, *has_header)?;
            rows.iter()
                .map(|r| {
                    r.last().copied().ok_or_else(|| {
                        Error::InvalidInput("series csv has an empty row".into())
                    })
                })
                .collect()
        }
    }
}

/// Build the supervised dataset a task trains on: generate or load,
/// optionally delay-embed, optionally normalize.
pub fn assemble_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    let ds = match (&spec.source, &spec.embedding) {
        (_, Some(e)) => {
            let series = assemble_series(spec)?;
            embed_series(&series, &e.lags, e.horizon)?
        }
        (
            DataSource::Csv {
                path,
                target_cols,
                has_header,
            },
            None,
        ) => load_csv(path, *target_cols, *has_header)?,
        (DataSource::MackeyGlass(_), None) => {
            return Err(Error::Config(
                "dataset.embedding is required for a series source".into(),
            ));
        }
    };
    if spec.normalize {
        let (normalized, _) = normalize_minmax(&ds)?;
        Ok(normalized)
    } else {
        Ok(ds)
    }
}

fn run_name(cfg: &ExperimentConfig) -> String {
    cfg.out_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| cfg.task.name().to_string())
}

/// RMSE of a predictor on a split; `None` when the split is empty or the
/// score is non-finite (JSON has no representation for it).
fn score(
    predict: &dyn Fn(&Matrix) -> Result<Matrix>,
    ds: &Dataset,
) -> Option<f64> {
    if ds.is_empty() {
        return None;
    }
    let r = predict(&ds.inputs).ok().and_then(|p| rmse(&p, &ds.targets).ok())?;
    r.is_finite().then_some(r)
}

fn prediction_rows(
    predict: &dyn Fn(&Matrix) -> Result<Matrix>,
    test: &Dataset,
) -> Result<Option<(Vec<String>, Vec<Vec<f64>>)>> {
    if test.is_empty() {
        return Ok(None);
    }
    let pred = predict(&test.inputs)?;
    let d = test.input_width();
    let m = test.target_width();
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{}", i)).collect();
    if m == 1 {
        header.push("target".into());
        header.push("prediction".into());
    } else {
        header.extend((1..=m).map(|i| format!("target{}", i)));
        header.extend((1..=m).map(|i| format!("prediction{}", i)));
    }
    let rows = (0..test.len())
        .map(|i| {
            let mut row = test.inputs.row(i).to_vec();
            row.extend_from_slice(test.targets.row(i));
            row.extend_from_slice(pred.row(i));
            row
        })
        .collect();
    Ok(Some((header, rows)))
}

fn gaussianized(fs: FuzzySystem) -> FuzzySystem {
    let convert = |v: &mut FuzzyVariable| {
        for t in &mut v.terms {
            if let MfKind::Triangular { a, b, .. } = t.kind {
                t.kind = MfKind::Gaussian {
                    center: b,
                    // Matched so the gaussian crosses 0.5 where the
                    // triangle does.
                    sigma: (b - a) / (8.0 * std::f64::consts::LN_2).sqrt(),
                };
            }
        }
    };
    let mut fs = fs;
    for v in &mut fs.inputs {
        convert(v);
    }
    if let Some(v) = &mut fs.output {
        convert(v);
    }
    fs
}

struct TaskResult {
    history: History,
    model: serde_json::Value,
    param_count: usize,
    train_rmse: Option<f64>,
    valid_rmse: Option<f64>,
    test_rmse: Option<f64>,
    diverged: bool,
    predictions: Option<(Vec<String>, Vec<Vec<f64>>)>,
}

fn run_train_nn(cfg: &ExperimentConfig, parts: &(Dataset, Dataset, Dataset)) -> Result<TaskResult> {
    let (train_ds, valid_ds, test_ds) = parts;
    let model = cfg.model.as_ref().unwrap();
    let trainer = cfg.trainer.as_ref().unwrap();
    if model.layer_sizes[0] != train_ds.input_width()
        || *model.layer_sizes.last().unwrap() != train_ds.target_width()
    {
        return Err(Error::Config(format!(
            "model.layer_sizes {:?} does not match the {}-in {}-out dataset",
            model.layer_sizes,
            train_ds.input_width(),
            train_ds.target_width()
        )));
    }
    let mut rng = RngStream::new(cfg.seed, 0);
    let net = MLPNetwork::random(&model.layer_sizes, &model.transfers, &mut rng, model.init_scale)?;
    let (final_net, curve, diverged) = match train(&net, train_ds, trainer) {
        Ok(report) => (report.final_net, report.loss_curve, false),
        Err(Error::TrainingDiverged(report)) => (report.final_net, report.loss_curve, true),
        Err(e) => return Err(e),
    };
    let predict: Box<dyn Fn(&Matrix) -> Result<Matrix>> = {
        let net = final_net.clone();
        Box::new(move |m| net.forward_batch(m))
    };
    Ok(TaskResult {
        history: History::Epochs(curve),
        model: serde_json::to_value(&final_net)?,
        param_count: final_net.param_count(),
        train_rmse: score(&*predict, train_ds),
        valid_rmse: score(&*predict, valid_ds),
        test_rmse: score(&*predict, test_ds),
        diverged,
        predictions: if diverged {
            None
        } else {
            prediction_rows(&*predict, test_ds)?
        },
    })
}

fn run_anfis(cfg: &ExperimentConfig, parts: &(Dataset, Dataset, Dataset)) -> Result<TaskResult> {
    let (train_ds, valid_ds, test_ds) = parts;
    let spec = cfg.anfis.as_ref().unwrap();
    if train_ds.target_width() != 1 {
        return Err(Error::Config("anfis models a single output".into()));
    }
    let (input_universes, output_universe) = data_universes(train_ds);
    let vars: Vec<FuzzyVariable> = input_universes
        .iter()
        .enumerate()
        .map(|(i, &u)|

            FuzzyVariable::new(
                format!("x{}", i + 1),
                u,
                crate::fuzzy::uniform_triangles(u, spec.terms_per_var)?,
            ))
        .collect::<Result<_>>()?;
    let mut rng = RngStream::new(cfg.seed, 0);
    let initial = match spec.kind {
        FisKind::TakagiSugeno => {
            grid_partition(&vars, None, spec.terms_per_var, FisKind::TakagiSugeno, &mut rng)?
        }
        FisKind::Mamdani => {
            let out_var = FuzzyVariable::new(
                "y",
                output_universe,
                crate::fuzzy::uniform_triangles(output_universe, spec.terms_per_var)?,
            )?;
            gaussianized(grid_partition(
                &vars,
                Some(&out_var),
                spec.terms_per_var,
                FisKind::Mamdani,
                &mut rng,
            )?)
        }
    };
    let report = match spec.kind {
        FisKind::TakagiSugeno => hybrid_train_ts(&initial, train_ds, &spec.train)?,
        FisKind::Mamdani => gradient_train_mamdani(&initial, train_ds, &spec.train)?,
    };
    let system = report.system;
    let predict: Box<dyn Fn(&Matrix) -> Result<Matrix>> = {
        let fs = system.clone();
        Box::new(move |m| fs.predict_batch(m))
    };
    Ok(TaskResult {
        history: History::Epochs(report.loss_curve),
        model: serde_json::to_value(&system)?,
        param_count: system.param_count(),
        train_rmse: score(&*predict, train_ds),
        valid_rmse: score(&*predict, valid_ds),
        test_rmse: score(&*predict, test_ds),
        diverged: report.diverged,
        predictions: prediction_rows(&*predict, test_ds)?,
    })
}

fn run_mleann(cfg: &ExperimentConfig, parts: &(Dataset, Dataset, Dataset)) -> Result<TaskResult> {
    let (train_ds, valid_ds, test_ds) = parts;
    if valid_ds.is_empty() || test_ds.is_empty() {
        return Err(Error::Config(
            "dataset.split: mleann needs non-empty valid and test splits".into(),
        ));
    }
    let run = mleann_run(cfg.mleann.as_ref().unwrap(), train_ds, valid_ds, test_ds)?;
    let predict: Box<dyn Fn(&Matrix) -> Result<Matrix>> = {
        let net = run.network.clone();
        Box::new(move |m| net.forward_batch(m))
    };
    Ok(TaskResult {
        history: History::Generations(run.stats.clone()),
        model: serde_json::json!({
            "genome": run.genome,
            "network": run.network,
            "trainer": run.trainer,
        }),
        param_count: run.network.param_count(),
        train_rmse: score(&*predict, train_ds),
        valid_rmse: run.valid_rmse.is_finite().then_some(run.valid_rmse),
        test_rmse: run.test_rmse.is_finite().then_some(run.test_rmse),
        diverged: false,
        predictions: prediction_rows(&*predict, test_ds)?,
    })
}

fn run_evonf(cfg: &ExperimentConfig, parts: &(Dataset, Dataset, Dataset)) -> Result<TaskResult> {
    let (train_ds, valid_ds, test_ds) = parts;
    if valid_ds.is_empty() || test_ds.is_empty() {
        return Err(Error::Config(
            "dataset.split: evonf needs non-empty valid and test splits".into(),
        ));
    }
    let run = evonf_run(cfg.evonf.as_ref().unwrap(), train_ds, valid_ds, test_ds)?;
    let predict: Box<dyn Fn(&Matrix) -> Result<Matrix>> = {
        let fs = run.system.clone();
        Box::new(move |m| fs.predict_batch(m))
    };
    Ok(TaskResult {
        history: History::Generations(run.stats.clone()),
        model: serde_json::json!({
            "genome": run.genome,
            "system": run.system,
            "trainer": run.trainer,
        }),
        param_count: run.system.param_count(),
        train_rmse: score(&*predict, train_ds),
        valid_rmse: run.valid_rmse.is_finite().then_some(run.valid_rmse),
        test_rmse: run.test_rmse.is_finite().then_some(run.test_rmse),
        diverged: false,
        predictions: prediction_rows(&*predict, test_ds)?,
    })
}

fn run_ea_bench(cfg: &ExperimentConfig) -> Result<TaskResult> {
    let spec = cfg.ea_bench.as_ref().unwrap();
    let layout = vec![Span {
        name: "x".into(),
        start: 0,
        bounds: vec![spec.function.bounds(); spec.dims],
    }];
    let function = spec.function;
    let (best, stats) = evolve(
        |rng| Genome::random(&layout, rng),
        |g, _| function.eval(&g.genes),
        &spec.ea,
    )?;
    let best_fitness = function.eval(&best.genes);
    Ok(TaskResult {
        history: History::Generations(stats),
        model: serde_json::json!({
            "genome": best,
            "best_fitness": best_fitness,
        }),
        param_count: spec.dims,
        train_rmse: None,
        valid_rmse: None,
        test_rmse: None,
        diverged: false,
        predictions: None,
    })
}

/// Execute a validated config. File writing is separate (see
/// [`run_to_dir`]) so tests can inspect outputs directly.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let started = Instant::now();

    let mut series = None;
    let mut fingerprint = None;
    let result = match cfg.task {
        Task::GenSeries => {
            let s = assemble_series(cfg.dataset.as_ref().unwrap())?;
            series = Some(s);
            TaskResult {
                history: History::Epochs(Vec::new()),
                model: serde_json::Value::Null,
                param_count: 0,
                train_rmse: None,
                valid_rmse: None,
                test_rmse: None,
                diverged: false,
                predictions: None,
            }
        }
        Task::EaBench => run_ea_bench(cfg)?,
        _ => {
            let ds = assemble_dataset(cfg.dataset.as_ref().unwrap())?;
            fingerprint = Some(format!("{:016x}", ds.fingerprint()));
            let parts = split(&ds, &cfg.dataset.as_ref().unwrap().split)?;
            match cfg.task {
                Task::TrainNn => run_train_nn(cfg, &parts)?,
                Task::Anfis => run_anfis(cfg, &parts)?,
                Task::Mleann => run_mleann(cfg, &parts)?,
                Task::Evonf => run_evonf(cfg, &parts)?,
                Task::GenSeries | Task::EaBench => unreachable!("handled above"),
            }
        }
    };

    let record = RunRecord {
        toolkit_version: TOOLKIT_VERSION.to_string(),
        name: run_name(cfg),
        config: cfg.clone(),
        dataset_fingerprint: fingerprint,
        history: result.history,
        model: result.model,
        param_count: result.param_count,
        train_rmse: result.train_rmse,
        valid_rmse: result.valid_rmse,
        test_rmse: result.test_rmse,
        duration_seconds: started.elapsed().as_secs_f64(),
        diverged: result.diverged,
    };
    Ok(RunOutput {
        record,
        series,
        predictions: result.predictions,
    })
}

/// Execute and persist: run.json always; history.csv, predictions.csv,
/// series.csv when the task produced them. All writes are atomic.
pub fn run_to_dir(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let out = execute(cfg)?;
    let dir = &cfg.out_dir;
    out.record
        .to_json()
        .and_then(|json| write_atomic(&dir.join("run.json"), &json))?;
    if !out.record.history.is_empty() {
        write_atomic(&dir.join("history.csv"), &out.record.history.to_csv())?;
    }
    if let Some((header, rows)) = &out.predictions {
        let cols: Vec<&str> = header.iter().map(String::as_str).collect();
        write_atomic(&dir.join("predictions.csv"), &format_csv(Some(&cols), rows))?;
    }
    if let Some(series) = &out.series {
        let rows: Vec<Vec<f64>> = series
            .iter()
            .enumerate()
            .map(|(t, x)| vec![t as f64, *x])
            .collect();
        write_atomic(
            &dir.join("series.csv"),
            &format_csv(Some(&SERIES_HEADER), &rows),
        )?;
    }
    Ok(out.record)
}
