//! End-to-end tests of the hybridci binary: exit codes, artifact files,
//! determinism across reruns and thread counts, compare semantics.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hybridci::data::{load_csv, parse_csv};
use hybridci::record::RunRecord;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybridci"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hybridci-cli-{}-{}", tag, std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn train_nn_config(out_dir: &Path, seed: u64, epochs: usize) -> String {
    format!(
        r#"{{
            "task": "train-nn",
            "seed": {seed},
            "out_dir": {out_dir:?},
            "dataset": {{
                "source": {{"mackey_glass": {{"n": 400, "washout": 100}}}},
                "embedding": {{"lags": [0, 6], "horizon": 6}},
                "split": {{"train_fraction": 0.5, "valid_fraction": 0.25,
                           "test_fraction": 0.25, "shuffle": false, "seed": 0}}
            }},
            "model": {{"layer_sizes": [2, 4, 1], "transfers": ["tanh"]}},
            "trainer": {{"algorithm": "scg", "epochs": {epochs}}}
        }}"#
    )
}

#[test]
fn gen_series_writes_the_requested_length() {
    let dir = workdir("gen");
    let cfg = write_config(
        &dir,
        "gen.json",
        &format!(
            r#"{{"task": "gen-series", "out_dir": {:?},
                "dataset": {{"source": {{"mackey_glass": {{"n": 321}}}}}}}}"#,
            dir.join("series")
        ),
    );
    run_ok(bin().arg("gen-series").arg(&cfg).arg("--quiet"));
    let ds = load_csv(&dir.join("series/series.csv"), 1, true).unwrap();
    assert_eq!(ds.len(), 321);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn rerunning_the_same_config_is_byte_identical() {
    let dir = workdir("determinism");
    let out = dir.join("run");
    let cfg = write_config(&dir, "nn.json", &train_nn_config(&out, 11, 40));
    run_ok(bin().arg("run").arg(&cfg).arg("--quiet"));
    let history = std::fs::read(out.join("history.csv")).unwrap();
    let predictions = std::fs::read(out.join("predictions.csv")).unwrap();
    run_ok(bin().arg("run").arg(&cfg).arg("--quiet"));
    assert_eq!(std::fs::read(out.join("history.csv")).unwrap(), history);
    assert_eq!(
        std::fs::read(out.join("predictions.csv")).unwrap(),
        predictions
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = workdir("threads");
    let evonf = |out: &Path| {
        format!(
            r#"{{
                "task": "evonf",
                "seed": 21,
                "out_dir": {out:?},
                "dataset": {{
                    "source": {{"mackey_glass": {{"n": 300, "washout": 100}}}},
                    "embedding": {{"lags": [0, 6], "horizon": 6}},
                    "split": {{"train_fraction": 0.5, "valid_fraction": 0.25,
                               "test_fraction": 0.25, "shuffle": false, "seed": 0}}
                }},
                "evonf": {{"terms_per_var": 2, "fix_fis_type": "takagi_sugeno",
                           "ea": {{"population_size": 6, "generations": 3}}}}
            }}"#
        )
    };
    let out1 = dir.join("t1");
    let out4 = dir.join("t4");
    let cfg1 = write_config(&dir, "t1.json", &evonf(&out1));
    let cfg4 = write_config(&dir, "t4.json", &evonf(&out4));
    run_ok(bin().arg("run").arg(&cfg1).arg("--quiet").env("HYBRIDCI_THREADS", "1"));
    run_ok(bin().arg("run").arg(&cfg4).arg("--quiet").env("HYBRIDCI_THREADS", "4"));
    assert_eq!(
        std::fs::read(out1.join("history.csv")).unwrap(),
        std::fs::read(out4.join("history.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(out1.join("predictions.csv")).unwrap(),
        std::fs::read(out4.join("predictions.csv")).unwrap()
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn rerunning_the_echoed_config_reproduces_the_numbers() {
    let dir = workdir("echo");
    let out = dir.join("run");
    let cfg = write_config(&dir, "nn.json", &train_nn_config(&out, 23, 30));
    run_ok(bin().arg("run").arg(&cfg).arg("--quiet"));
    let first = RunRecord::load(&out).unwrap();

    // The run.json echo is itself a valid config for the binary.
    let echoed = write_config(
        &dir,
        "echo.json",
        &serde_json::to_string(&first.config).unwrap(),
    );
    run_ok(bin().arg("run").arg(&echoed).arg("--quiet"));
    let second = RunRecord::load(&out).unwrap();
    assert_eq!(second.history, first.history);
    assert_eq!(second.model, first.model);
    assert_eq!(
        second.test_rmse.unwrap().to_bits(),
        first.test_rmse.unwrap().to_bits()
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn invalid_configs_exit_nonzero_and_name_the_field() {
    let dir = workdir("invalid");
    let cases = [
        (
            "unknown.json",
            r#"{"task": "gen-series", "bogus": 1}"#,
            "bogus",
        ),
        (
            "missing.json",
            r#"{"task": "train-nn", "model": {"layer_sizes": [2, 1], "transfers": []}}"#,
            "dataset",
        ),
        (
            "fraction.json",
            r#"{"task": "gen-series",
                "dataset": {"source": {"mackey_glass": {}},
                            "split": {"train_fraction": 2.0}}}"#,
            "split",
        ),
    ];
    for (name, json, field) in cases {
        let cfg = write_config(&dir, name, json);
        let out = bin().arg("run").arg(&cfg).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "case {}", name);
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(
            stderr.contains(field),
            "case {}: stderr does not name {}: {}",
            name,
            field,
            stderr
        );
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn gen_series_subcommand_rejects_other_tasks() {
    let dir = workdir("wrongtask");
    let cfg = write_config(&dir, "nn.json", &train_nn_config(&dir.join("run"), 1, 5));
    let out = bin().arg("gen-series").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gen-series"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn diverged_runs_exit_one_with_a_partial_record() {
    let dir = workdir("diverged");
    let out = dir.join("run");
    let cfg = write_config(
        &dir,
        "blowup.json",
        &format!(
            r#"{{
                "task": "train-nn",
                "out_dir": {out:?},
                "dataset": {{
                    "source": {{"mackey_glass": {{"n": 300, "washout": 100}}}},
                    "embedding": {{"lags": [0, 6], "horizon": 6}},
                    "split": {{"train_fraction": 0.5, "valid_fraction": 0.25,
                               "test_fraction": 0.25, "shuffle": false, "seed": 0}}
                }},
                "model": {{"layer_sizes": [2, 3, 1], "transfers": ["sigmoid"],
                           "init_scale": 1e155}},
                "trainer": {{"algorithm": "bp", "epochs": 5}}
            }}"#
        ),
    );
    let result = bin().arg("run").arg(&cfg).arg("--quiet").output().unwrap();
    assert_eq!(result.status.code(), Some(1));
    let record = RunRecord::load(&out).unwrap();
    assert!(record.diverged);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn seed_and_out_flags_override_the_config() {
    let dir = workdir("flags");
    let cfg = write_config(&dir, "nn.json", &train_nn_config(&dir.join("orig"), 11, 20));
    let moved = dir.join("moved");
    run_ok(
        bin()
            .arg("run")
            .arg(&cfg)
            .arg("--seed")
            .arg("400")
            .arg("--out")
            .arg(&moved)
            .arg("--quiet"),
    );
    assert!(!dir.join("orig").exists());
    let record = RunRecord::load(&moved).unwrap();
    assert_eq!(record.config.seed, 400);
    assert_eq!(record.name, "moved");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn compare_sorts_by_rmse_and_matches_the_source_records() {
    let dir = workdir("compare");
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    // Same dataset, different training effort: fingerprints match,
    // scores differ.
    let cfg_a = write_config(&dir, "a.json", &train_nn_config(&out_a, 11, 60));
    let cfg_b = write_config(&dir, "b.json", &train_nn_config(&out_b, 12, 2));
    run_ok(bin().arg("run").arg(&cfg_a).arg("--quiet"));
    run_ok(bin().arg("run").arg(&cfg_b).arg("--quiet"));

    let table = run_ok(
        bin()
            .arg("compare")
            .arg(&out_a)
            .arg(&out_b)
            .arg("--out")
            .arg(&dir),
    );
    let stdout = String::from_utf8_lossy(&table.stdout).into_owned();

    let text = std::fs::read_to_string(dir.join("compare.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("name,test_rmse,param_count,duration_seconds"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    let rmse: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(rmse[0] <= rmse[1]);

    for dirname in ["a", "b"] {
        let record = RunRecord::load(&dir.join(dirname)).unwrap();
        let row = rows.iter().find(|r| r[0] == dirname).unwrap();
        assert_eq!(row[1].parse::<f64>().unwrap(), record.test_rmse.unwrap());
        assert_eq!(row[2].parse::<usize>().unwrap(), record.param_count);
        assert!(stdout.contains(dirname));
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn compare_refuses_mismatched_fingerprints() {
    let dir = workdir("fingerprint");
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    let cfg_a = write_config(&dir, "a.json", &train_nn_config(&out_a, 11, 5));
    // Different series length → different dataset fingerprint.
    let cfg_b = write_config(
        &dir,
        "b.json",
        &train_nn_config(&out_b, 11, 5).replace("\"n\": 400", "\"n\": 401"),
    );
    run_ok(bin().arg("run").arg(&cfg_a).arg("--quiet"));
    run_ok(bin().arg("run").arg(&cfg_b).arg("--quiet"));
    let out = bin().arg("compare").arg(&out_a).arg(&out_b).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fingerprint"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn every_written_csv_parses_back() {
    let dir = workdir("csvs");
    let out = dir.join("run");
    let cfg = write_config(&dir, "nn.json", &train_nn_config(&out, 31, 20));
    run_ok(bin().arg("run").arg(&cfg).arg("--quiet"));
    run_ok(
        bin()
            .arg("compare")
            .arg(&out)
            .arg(&out)
            .arg("--out")
            .arg(&dir),
    );
    // predictions.csv and history.csv are numeric throughout.
    load_csv(&out.join("history.csv"), 1, true).unwrap();
    load_csv(&out.join("predictions.csv"), 2, true).unwrap();
    // compare.csv has a text name column; check the grid shape instead.
    let rows = parse_csv(
        &std::fs::read_to_string(dir.join("compare.csv"))
            .unwrap()
            .lines()
            .map(|l| l.splitn(2, ',').nth(1).unwrap().to_string())
            .collect::<Vec<_>>()
            .join("\n"),
        true,
    )
    .unwrap();
    assert_eq!(rows.len(), 2);
    std::fs::remove_dir_all(&dir).unwrap();
}
