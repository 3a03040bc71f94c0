use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hybridci::config::{ExperimentConfig, Task};
use hybridci::record::{compare_csv, compare_records, compare_table, write_atomic, RunRecord};
use hybridci::runner::run_to_dir;
use hybridci::{Error, Result};

#[derive(Parser)]
#[command(name = "hybridci", version, about = "Hybrid computational-intelligence experiment harness")]
struct Cli {
    /// Override the config seed (propagates to every nested seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress output; errors still go to stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the task described by a JSON config.
    Run { config: PathBuf },
    /// Tabulate finished runs over the same dataset, best RMSE first.
    Compare { dirs: Vec<PathBuf> },
    /// Generate a scalar series (the config task must be gen-series).
    GenSeries { config: PathBuf },
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("HYBRIDCI_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("HYBRIDCI_THREADS: not a thread count: {:?}", raw)))?;
    if n == 0 {
        return Ok(()); // 0 = auto, rayon's default sizing
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("HYBRIDCI_THREADS: {}", e)))
}

fn load_config(path: &PathBuf, cli: &Cli, expect: Option<Task>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(task) = expect {
        if cfg.task != task {
            return Err(Error::Config(format!(
                "task: expected {}, config says {}",
                task.name(),
                cfg.task.name()
            )));
        }
    }
    cfg.resolve_seed(cli.seed);
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_record(record: &RunRecord, quiet: bool) {
    if quiet {
        return;
    }
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{:.6}", x));
    println!(
        "{}: {}{} train {} valid {} test {} ({} params, {:.2}s)",
        record.config.task.name(),
        record.name,
        if record.diverged { " [diverged]" } else { "" },
        fmt(record.train_rmse),
        fmt(record.valid_rmse),
        fmt(record.test_rmse),
        record.param_count,
        record.duration_seconds,
    );
}

fn run(path: &PathBuf, cli: &Cli, expect: Option<Task>) -> Result<bool> {
    let cfg = load_config(path, cli, expect)?;
    let record = run_to_dir(&cfg)?;
    print_record(&record, cli.quiet);
    if record.diverged {
        eprintln!("run diverged; partial record in {}", cfg.out_dir.display());
    }
    Ok(record.diverged)
}

fn compare(dirs: &[PathBuf], cli: &Cli) -> Result<()> {
    let records: Vec<RunRecord> = dirs
        .iter()
        .map(|d| RunRecord::load(d))
        .collect::<Result<_>>()?;
    let rows = compare_records(&records)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    write_atomic(&out.join("compare.csv"), &compare_csv(&rows))?;
    if !cli.quiet {
        print!("{}", compare_table(&rows));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| match &cli.command {
        Command::Run { config } => run(config, &cli, None),
        Command::GenSeries { config } => run(config, &cli, Some(Task::GenSeries)),
        Command::Compare { dirs } => compare(dirs, &cli).map(|()| false),
    });
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(2)
        }
    }
}
