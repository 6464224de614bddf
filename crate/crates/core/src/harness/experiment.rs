use std::path::PathBuf;

use rayon::prelude::*;

use super::bounds::{error_bound, regret_bound, regret_bound_generic};
use super::config::{ExperimentConfig, ExperimentKind};
use super::table::{format_g12, mean_stderr, ResultTable};
use crate::env::UnimodalEnv;
use crate::error::Result;
use crate::policy::{final_error, run_policy};
use crate::rng::SimRng;
use crate::trim::{run_trim_test, solve_threshold, Decision, TestVariant, TrimTestConfig};

/// Runs `f(replicate)` for every replicate in parallel, in index order.
fn replicates<T: Send>(n: u64, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(f).collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    match cfg.experiment {
        ExperimentKind::Regret => regret(cfg, false),
        ExperimentKind::BoundCheck => regret(cfg, true),
        ExperimentKind::Risk => risk(cfg),
        ExperimentKind::TrimLength => trim_length(cfg),
        ExperimentKind::StallDemo => stall_demo(cfg),
    }
}

/// Writes `<outputs>/<experiment>.csv` and `.json`; returns both paths.
pub fn emit(cfg: &ExperimentConfig, table: &ResultTable) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(&cfg.outputs)?;
    let csv = cfg.outputs.join(format!("{}.csv", cfg.experiment.name()));
    let json = cfg.outputs.join(format!("{}.json", cfg.experiment.name()));
    table.emit_csv(&csv)?;
    table.emit_json(cfg, &json)?;
    Ok((csv, json))
}

fn regret(cfg: &ExperimentConfig, with_bounds: bool) -> Result<ResultTable> {
    let mut table = ResultTable::new();
    for spec in &cfg.envs {
        let env = spec.build()?;
        for &horizon in &cfg.horizons {
            for (stream, policy) in cfg.policies.iter().enumerate() {
                let pcfg = policy.resolve(&env, horizon, cfg.gamma)?;
                let runs = replicates(cfg.replicates, |r| {
                    let rng = SimRng::with_stream(cfg.base_seed.wrapping_add(r), stream as u64);
                    let trace = run_policy(&pcfg, &env, rng)?;
                    Ok((trace.regret(), final_error(&trace, &env)?, trace.phases.len() as f64))
                })?;
                let name = policy.name();
                let regrets: Vec<f64> = runs.iter().map(|r| r.0).collect();
                let errors: Vec<f64> = runs.iter().map(|r| r.1).collect();
                table.push_replicates(&spec.id, name, horizon, "regret", &regrets);
                table.push_replicates(&spec.id, name, horizon, "error", &errors);
                if pcfg.kind.is_sp() {
                    let phases: Vec<f64> = runs.iter().map(|r| r.2).collect();
                    table.push_replicates(&spec.id, name, horizon, "phases", &phases);
                }
                if with_bounds && pcfg.kind.is_sp() && horizon >= 2 {
                    let params = env.class_params()?;
                    let rb = regret_bound(&params, env.peak_mean(), horizon, cfg.gamma)?;
                    let eb = error_bound(&params, env.peak_mean(), horizon, cfg.gamma)?;
                    let generic = regret_bound_generic(&env, horizon, cfg.gamma)?;
                    table.push_constant(&spec.id, name, horizon, "regret_bound", rb);
                    table.push_constant(&spec.id, name, horizon, "regret_bound_generic", generic);
                    table.push_constant(&spec.id, name, horizon, "error_bound", eb);
                    let within = mean_stderr(&regrets).0 <= rb && mean_stderr(&errors).0 <= eb;
                    table.push_constant(&spec.id, name, horizon, "within_bounds", if within { 1.0 } else { 0.0 });
                }
            }
        }
    }
    Ok(table)
}

fn unit_test_config(horizon: u64, zeta: f64, variant: TestVariant) -> Result<TrimTestConfig> {
    TrimTestConfig::new(0.0, 1.0, horizon, zeta, variant)
}

/// True when the decision discards the slice holding the peak.
pub fn is_wrong_trim(cfg: &TrimTestConfig, decision: Decision, peak: f64) -> bool {
    let arms = cfg.arms();
    match decision {
        Decision::TrimLeft => peak < arms[0],
        Decision::TrimRight => peak > arms[arms.len() - 1],
        Decision::NoDecision => false,
    }
}

fn test_label(variant: TestVariant, zeta: f64) -> String {
    format!("{}:zeta={}", variant.name(), format_g12(zeta))
}

fn risk(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let mut table = ResultTable::new();
    for spec in &cfg.envs {
        let env = spec.build()?;
        for &horizon in &cfg.horizons {
            for (zi, &zeta) in cfg.zetas.iter().enumerate() {
                for (vi, &variant) in cfg.tests.iter().enumerate() {
                    let tcfg = unit_test_config(horizon, zeta, variant)?;
                    let stream = (zi * cfg.tests.len() + vi) as u64;
                    let runs = replicates(cfg.replicates, |r| {
                        let rng = SimRng::with_stream(cfg.base_seed.wrapping_add(r), stream);
                        let out = run_trim_test(&tcfg, &env, rng)?;
                        Ok((
                            is_wrong_trim(&tcfg, out.decision, env.peak()) as u8 as f64,
                            (out.decision == Decision::NoDecision) as u8 as f64,
                            out.length as f64,
                        ))
                    })?;
                    let label = test_label(variant, zeta);
                    table.push_replicates(&spec.id, &label, horizon, "wrong_trim", &runs.iter().map(|r| r.0).collect::<Vec<_>>());
                    table.push_replicates(&spec.id, &label, horizon, "no_decision", &runs.iter().map(|r| r.1).collect::<Vec<_>>());
                    table.push_replicates(&spec.id, &label, horizon, "length", &runs.iter().map(|r| r.2).collect::<Vec<_>>());
                    table.push_constant(&spec.id, &label, horizon, "risk_budget", zeta);
                }
            }
        }
    }
    Ok(table)
}

/// Half the gap between the middle arm and the outer arm on the far side of
/// the peak, for the three-arm test on `[0, 1]`.
pub fn length_gap(env: &UnimodalEnv) -> f64 {
    let (x1, x2, x3) = (0.25, 0.5, 0.75);
    let xm = if env.peak() >= x2 { x1 } else { x3 };
    (env.mean_at(x2) - env.mean_at(xm)) / 2.0
}

fn trim_length(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let mut table = ResultTable::new();
    for spec in &cfg.envs {
        let env = spec.build()?;
        let delta = length_gap(&env);
        for &horizon in &cfg.horizons {
            for (zi, &zeta) in cfg.zetas.iter().enumerate() {
                let f = solve_threshold(horizon.max(2), zeta, 3)?;
                let tail_level = 8.0 * f / (delta * delta);
                for (vi, &variant) in cfg.tests.iter().enumerate() {
                    let tcfg = unit_test_config(horizon, zeta, variant)?;
                    let stream = (zi * cfg.tests.len() + vi) as u64;
                    let runs = replicates(cfg.replicates, |r| {
                        let rng = SimRng::with_stream(cfg.base_seed.wrapping_add(r), stream);
                        let out = run_trim_test(&tcfg, &env, rng)?;
                        let max = *out.samples_per_arm.iter().max().expect("three arms") as f64;
                        let mean = out.samples_per_arm.iter().sum::<u64>() as f64 / 3.0;
                        Ok((mean, max, out.length as f64, (max >= tail_level) as u8 as f64))
                    })?;
                    let label = test_label(variant, zeta);
                    let col = |i: usize| -> Vec<f64> {
                        runs.iter().map(|r| [r.0, r.1, r.2, r.3][i]).collect()
                    };
                    table.push_replicates(&spec.id, &label, horizon, "mean_samples", &col(0));
                    table.push_replicates(&spec.id, &label, horizon, "max_samples", &col(1));
                    table.push_replicates(&spec.id, &label, horizon, "length", &col(2));
                    table.push_replicates(&spec.id, &label, horizon, "tail_event", &col(3));
                    table.push_constant(&spec.id, &label, horizon, "threshold", f);
                    table.push_constant(&spec.id, &label, horizon, "gap", delta);
                    table.push_constant(&spec.id, &label, horizon, "length_bound", (f + 32.0) / (delta * delta));
                    table.push_constant(&spec.id, &label, horizon, "tail_bound", 2.0 * (-f).exp());
                }
            }
        }
    }
    Ok(table)
}

fn stall_demo(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let mut table = ResultTable::new();
    let variants = [TestVariant::TwoPointProbe, TestVariant::It3Prime];
    for spec in &cfg.envs {
        let env = spec.build()?;
        for &horizon in &cfg.horizons {
            for (zi, &zeta) in cfg.zetas.iter().enumerate() {
                for (vi, &variant) in variants.iter().enumerate() {
                    let tcfg = unit_test_config(horizon, zeta, variant)?;
                    let stream = (zi * variants.len() + vi) as u64;
                    let runs = replicates(cfg.replicates, |r| {
                        let rng = SimRng::with_stream(cfg.base_seed.wrapping_add(r), stream);
                        let out = run_trim_test(&tcfg, &env, rng)?;
                        Ok(((out.decision == Decision::NoDecision) as u8 as f64, out.length as f64))
                    })?;
                    let label = test_label(variant, zeta);
                    table.push_replicates(&spec.id, &label, horizon, "no_decision", &runs.iter().map(|r| r.0).collect::<Vec<_>>());
                    table.push_replicates(&spec.id, &label, horizon, "length", &runs.iter().map(|r| r.1).collect::<Vec<_>>());
                }
            }
        }
    }
    Ok(table)
}
