use rand::Rng;

use super::{PolicyConfig, PolicyKind, PolicyTrace, Recorder};
use crate::env::UnimodalEnv;
use crate::error::{invalid, Result};
use crate::kl::{bernoulli_kl, RewardModel};
use crate::trim::RewardSource;

pub const DEFAULT_LOGLOG_COEFF: f64 = 3.0;

const INDEX_TOL: f64 = 1e-9;

/// `{0, delta, 2 delta, ...} ∪ {1}`.
pub fn kl_ucb_grid(delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1], got {delta}")));
    }
    let mut grid: Vec<f64> = (0..)
        .map(|j| j as f64 * delta)
        .take_while(|x| *x < 1.0 - 1e-12)
        .collect();
    grid.push(1.0);
    Ok(grid)
}

fn exploration(n: u64, loglog_coeff: f64) -> f64 {
    let n = n.max(1) as f64;
    n.ln() + loglog_coeff * n.max(3.0).ln().ln()
}

/// Largest `q` in `[mean_hat, 1]` with `t_k kl(mean_hat, q) <= ln n + c ln ln max(n, 3)`.
///
/// Unsampled arms get index 1. For Gaussian rewards the bound has the closed
/// form `mean_hat + sigma sqrt(2 budget / t_k)` and unsampled arms get `+inf`.
pub fn kl_ucb_index(model: RewardModel, mean_hat: f64, t_k: u64, n: u64, loglog_coeff: f64) -> f64 {
    index_with_budget(model, mean_hat, t_k, exploration(n, loglog_coeff))
}

fn index_with_budget(model: RewardModel, mean_hat: f64, t_k: u64, budget: f64) -> f64 {
    match model {
        RewardModel::Bernoulli => {
            if t_k == 0 {
                return 1.0;
            }
            let level = budget / t_k as f64;
            if mean_hat >= 1.0 || bernoulli_kl(mean_hat, 1.0) <= level {
                return 1.0;
            }
            let (mut lo, mut hi) = (mean_hat, 1.0);
            while hi - lo > INDEX_TOL {
                let mid = 0.5 * (lo + hi);
                if bernoulli_kl(mean_hat, mid) <= level {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
        RewardModel::Gaussian { sigma } => {
            if t_k == 0 {
                return f64::INFINITY;
            }
            mean_hat + sigma * (2.0 * budget / t_k as f64).sqrt()
        }
    }
}

/// Pinsker upper bound on the Bernoulli index.
fn pinsker_bound(mean_hat: f64, t_k: u64, budget: f64) -> f64 {
    if t_k == 0 {
        return 1.0;
    }
    (mean_hat + (budget / (2.0 * t_k as f64)).sqrt()).min(1.0)
}

/// Last index computed for an arm whose statistics have not changed since.
///
/// The exploration budget only grows, so the cached value is a lower bound on
/// the current index, and convexity of `q -> kl(p, q)` turns the tangent at
/// the cached point into an upper bound.
#[derive(Clone, Copy)]
struct CachedIndex {
    q: f64,
    kl_at_q: f64,
    slope: f64,
}

impl CachedIndex {
    fn new(mean_hat: f64, q: f64) -> Self {
        let slope = if q < 1.0 && q > 0.0 { (q - mean_hat) / (q * (1.0 - q)) } else { 0.0 };
        Self { q, kl_at_q: bernoulli_kl(mean_hat, q), slope }
    }

    fn upper_bound(&self, level: f64) -> f64 {
        if self.q >= 1.0 || self.slope <= 0.0 {
            return 1.0;
        }
        // slack for rounding in the tangent evaluation
        (self.q + (level - self.kl_at_q) / self.slope + 1e-12).min(1.0)
    }
}

/// KL-UCB on a fixed grid; ties go to the lowest coordinate.
pub fn run_kl_ucb<R: Rng>(cfg: &PolicyConfig, env: &UnimodalEnv, rng: R) -> Result<PolicyTrace> {
    cfg.validate()?;
    let PolicyKind::KlUcb { delta, loglog_coeff } = cfg.kind else {
        return Err(invalid(format!("run_kl_ucb cannot run {}", cfg.kind.name())));
    };
    let model = env.model();
    let grid = kl_ucb_grid(delta)?;
    let mut counts = vec![0u64; grid.len()];
    let mut sums = vec![0.0; grid.len()];
    let mut cache: Vec<Option<CachedIndex>> = vec![None; grid.len()];
    let mut recorder = Recorder::new(env, rng, cfg.horizon);
    let mut previous = 0usize;
    for n in 1..=cfg.horizon {
        let budget = exploration(n, loglog_coeff);
        let mean = |i: usize| if counts[i] == 0 { 0.0 } else { model.clamp_mean(sums[i] / counts[i] as f64) };
        let arm = match model {
            RewardModel::Bernoulli => {
                let fresh = |i: usize, cache: &mut Vec<Option<CachedIndex>>| {
                    let q = index_with_budget(model, mean(i), counts[i], budget);
                    if counts[i] > 0 {
                        cache[i] = Some(CachedIndex::new(mean(i), q));
                    }
                    q
                };
                // Seed with last round's choice, then only refine arms whose
                // upper bound can still beat or tie the incumbent.
                let mut best_arm = previous;
                let mut best = fresh(previous, &mut cache);
                for i in 0..grid.len() {
                    if i == best_arm {
                        continue;
                    }
                    let ub = match (counts[i], cache[i]) {
                        (0, _) => 1.0,
                        (t, Some(c)) => c.upper_bound(budget / t as f64).min(pinsker_bound(mean(i), t, budget)),
                        (t, None) => pinsker_bound(mean(i), t, budget),
                    };
                    if ub < best || (ub == best && i > best_arm) {
                        continue;
                    }
                    let v = fresh(i, &mut cache);
                    if v > best || (v == best && i < best_arm) {
                        best = v;
                        best_arm = i;
                    }
                }
                best_arm
            }
            RewardModel::Gaussian { .. } => {
                let mut best_arm = 0;
                let mut best = f64::NEG_INFINITY;
                for i in 0..grid.len() {
                    let v = index_with_budget(model, mean(i), counts[i], budget);
                    if v > best {
                        best = v;
                        best_arm = i;
                    }
                }
                best_arm
            }
        };
        let reward = recorder.pull(grid[arm]);
        counts[arm] += 1;
        sums[arm] += reward;
        cache[arm] = None;
        previous = arm;
    }
    Ok(recorder.finish())
}
