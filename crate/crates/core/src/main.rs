use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use unimodal_bandit::harness::{emit, run_experiment, ExperimentConfig, ExperimentKind, Replicate, ResultTable};

#[derive(Parser)]
#[command(version, about = "Monte Carlo experiments for unimodal continuum-armed bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regret and final error of policies over horizons.
    Regret(Overrides),
    /// Wrong-trim frequencies of single trimming tests.
    Risk(Overrides),
    /// Trimming-test lengths against their bounds.
    TrimLength(Overrides),
    /// No-decision rate of the two-point probe.
    StallDemo(Overrides),
    /// Phased-policy regret and error against the closed-form bounds.
    BoundCheck(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// TOML experiment file; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; replicate r uses seed + r.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    replicates: Option<u64>,
    /// Replaces the horizon list with a single horizon.
    #[arg(long)]
    horizon: Option<u64>,
}

fn resolve(kind: ExperimentKind, o: &Overrides) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(path) => ExperimentConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::builtin(kind),
    };
    if cfg.experiment != kind {
        bail!("config declares experiment {:?} but the subcommand is {:?}", cfg.experiment.name(), kind.name());
    }
    if let Some(seed) = o.seed {
        cfg.base_seed = seed;
    }
    if let Some(dir) = &o.out_dir {
        cfg.outputs = dir.clone();
    }
    if let Some(n) = o.replicates {
        cfg.replicates = n;
    }
    if let Some(t) = o.horizon {
        cfg.horizons = vec![t];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn summarize(table: &ResultTable) {
    for row in table.rows.iter().filter(|r| r.replicate == Replicate::Agg) {
        let stderr = row.stderr.map(|s| format!(" ± {s:.4}")).unwrap_or_default();
        println!("{:<12} {:<24} T={:<9} {:<22} {:.6}{stderr}", row.env, row.policy, row.horizon, row.metric, row.value);
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let (kind, overrides) = match &cli.command {
        Command::Regret(o) => (ExperimentKind::Regret, o),
        Command::Risk(o) => (ExperimentKind::Risk, o),
        Command::TrimLength(o) => (ExperimentKind::TrimLength, o),
        Command::StallDemo(o) => (ExperimentKind::StallDemo, o),
        Command::BoundCheck(o) => (ExperimentKind::BoundCheck, o),
    };
    let cfg = resolve(kind, overrides)?;
    let table = run_experiment(&cfg)?;
    let (csv, json) = emit(&cfg, &table)?;
    summarize(&table);
    println!("wrote {} and {}", csv.display(), json.display());
    let violations: Vec<_> = table
        .rows
        .iter()
        .filter(|r| r.metric == "within_bounds" && r.value != 1.0)
        .map(|r| format!("{} / {} / T={}", r.env, r.policy, r.horizon))
        .collect();
    if !violations.is_empty() {
        eprintln!("bound violated for: {}", violations.join(", "));
        return Ok(false);
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
