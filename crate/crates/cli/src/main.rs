use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use rodsim::export;
use rodsim::{load_scenario, run_batch, run_trial, Scenario};
use rodsim_core::coordination::StrategyKind;
use rodsim_core::TrialRecord64;

#[derive(Parser)]
#[command(
    name = "rodsim",
    version,
    about = "Two-robot rod transport: simulator and experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and print its outcome.
    Run {
        /// Scenario file; built-in defaults when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// 1|no_learning, 2|learning, or 3|learning_switching.
        #[arg(long, default_value = "3")]
        strategy: String,
        /// Obstacle placement seed; the scenario's seed when omitted.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for trajectory.jsonl and clouds.csv; nothing is written
        /// when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run seed-paired trial batches per strategy and write CSV tables.
    Batch {
        /// Scenario file; built-in defaults when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Comma-separated strategies, e.g. "1,3".
        #[arg(long, default_value = "1,2,3")]
        strategies: String,
        /// Trials per strategy; trial i reuses seed + i across strategies.
        #[arg(long, default_value_t = 100)]
        trials: u32,
        /// Base seed; the scenario's seed when omitted.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; one per core when omitted.
        #[arg(long)]
        jobs: Option<usize>,
        /// Directory for results.csv and summary.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Check a scenario file and exit.
    Validate {
        /// Scenario file; built-in defaults when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

/// Distinguishes bad input (exit 1) from failures while running (exit 2).
enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("RODSIM_LOG")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { scenario, strategy, seed, out } => {
            let scn = load(scenario.as_deref()).map_err(Failure::Validation)?;
            let strategy = parse_strategy(&strategy).map_err(Failure::Validation)?;
            let seed = seed.unwrap_or(scn.seed);
            let record = run_trial(&scn, strategy, seed)
                .map_err(|e| Failure::Runtime(anyhow::Error::new(e).context("trial failed")))?;
            println!(
                "strategy={} seed={seed} outcome={} steps={} switches={}",
                strategy.label(),
                record.outcome,
                record.periods,
                record.switches
            );
            if let Some(dir) = out {
                write_run_outputs(&dir, &record).map_err(Failure::Runtime)?;
            }
            Ok(())
        }
        Command::Batch { scenario, strategies, trials, seed, jobs, out } => {
            let scn = load(scenario.as_deref()).map_err(Failure::Validation)?;
            let strategies = parse_strategies(&strategies).map_err(Failure::Validation)?;
            if let Some(0) = jobs {
                return Err(Failure::Validation(anyhow::anyhow!("--jobs must be at least 1")));
            }
            let seed = seed.unwrap_or(scn.seed);
            let result =
                run_batch(&scn, &strategies, trials, seed, jobs).map_err(Failure::Runtime)?;
            write_batch_outputs(&out, &result).map_err(Failure::Runtime)?;
            let mut table = Vec::new();
            export::write_summary(&mut table, &result.summary)
                .map_err(|e| Failure::Runtime(e.into()))?;
            print!("{}", String::from_utf8_lossy(&table));
            Ok(())
        }
        Command::Validate { scenario } => {
            load(scenario.as_deref()).map_err(Failure::Validation)?;
            match scenario {
                Some(path) => println!("ok: {}", path.display()),
                None => println!("ok: built-in defaults"),
            }
            Ok(())
        }
    }
}

fn load(path: Option<&Path>) -> anyhow::Result<Scenario> {
    match path {
        Some(p) => load_scenario(p),
        None => {
            let scn = Scenario::default();
            scn.validate()?;
            Ok(scn)
        }
    }
}

fn parse_strategy(text: &str) -> anyhow::Result<StrategyKind> {
    match text.trim().replace('-', "_").as_str() {
        "1" | "no_learning" => Ok(StrategyKind::NoLearning),
        "2" | "learning" => Ok(StrategyKind::Learning),
        "3" | "learning_switching" => Ok(StrategyKind::LearningWithSwitching),
        other => bail!(
            "unknown strategy {other:?}; use 1|2|3 or no_learning|learning|learning_switching"
        ),
    }
}

fn parse_strategies(text: &str) -> anyhow::Result<Vec<StrategyKind>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let strategy = parse_strategy(part)?;
        if out.contains(&strategy) {
            bail!("strategy {} listed twice", strategy.label());
        }
        out.push(strategy);
    }
    Ok(out)
}

fn write_run_outputs(dir: &Path, record: &TrialRecord64) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let trajectory = dir.join("trajectory.jsonl");
    let mut w = BufWriter::new(File::create(&trajectory)?);
    export::write_trajectory(&mut w, &record.records)?;
    w.flush()?;
    let clouds = dir.join("clouds.csv");
    let mut w = BufWriter::new(File::create(&clouds)?);
    export::write_clouds(&mut w, record)?;
    w.flush()?;
    println!("wrote {} and {}", trajectory.display(), clouds.display());
    Ok(())
}

fn write_batch_outputs(dir: &Path, result: &rodsim::BatchResult) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let results = dir.join("results.csv");
    let mut w = BufWriter::new(File::create(&results)?);
    export::write_results(&mut w, &result.rows)?;
    w.flush()?;
    let summary = dir.join("summary.csv");
    let mut w = BufWriter::new(File::create(&summary)?);
    export::write_summary(&mut w, &result.summary)?;
    w.flush()?;
    log::info!("wrote {} and {}", results.display(), summary.display());
    Ok(())
}
