//! Bandit policies on `[0, 1]` and the per-round trace they produce.

mod klucb;
mod kw;
mod sp;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::UnimodalEnv;
use crate::error::{invalid, Result};
use crate::interval::ExactInterval;
use crate::trim::{Decision, RewardSource};

pub use klucb::{kl_ucb_grid, kl_ucb_index, run_kl_ucb, DEFAULT_LOGLOG_COEFF};
pub use kw::run_kw;
pub use sp::run_sp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    /// Phases of the exact three-arm test.
    Sp,
    /// Phases of the closed-form three-arm test.
    SpPrime,
    /// KL-UCB on the grid `{0, delta, 2 delta, ...} ∪ {1}`.
    KlUcb { delta: f64, loglog_coeff: f64 },
    /// Kiefer-Wolfowitz with gains `a0 / n` and widths `c0 n^{-1/4}`.
    Kw { a0: f64, c0: f64 },
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Sp => "sp",
            PolicyKind::SpPrime => "sp_prime",
            PolicyKind::KlUcb { .. } => "kl_ucb",
            PolicyKind::Kw { .. } => "kw",
        }
    }

    pub fn is_sp(&self) -> bool {
        matches!(self, PolicyKind::Sp | PolicyKind::SpPrime)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub horizon: u64,
    /// Risk exponent; each phase runs at risk `horizon^{-gamma}`.
    pub gamma: f64,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, horizon: u64, gamma: f64) -> Result<Self> {
        let cfg = Self { kind, horizon, gamma };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(invalid("horizon must be at least 1"));
        }
        match self.kind {
            PolicyKind::Sp | PolicyKind::SpPrime if !(self.gamma > 0.5 && self.gamma.is_finite()) => {
                Err(invalid(format!("gamma must exceed 1/2, got {}", self.gamma)))
            }
            PolicyKind::KlUcb { delta, .. } if !(delta > 0.0 && delta <= 1.0) => {
                Err(invalid(format!("delta must lie in (0, 1], got {delta}")))
            }
            PolicyKind::KlUcb { loglog_coeff, .. } if !(loglog_coeff >= 0.0 && loglog_coeff.is_finite()) => {
                Err(invalid(format!("log-log coefficient must be nonnegative, got {loglog_coeff}")))
            }
            PolicyKind::Kw { a0, .. } if !(a0 >= 0.0 && a0.is_finite()) => {
                Err(invalid(format!("a0 must be nonnegative, got {a0}")))
            }
            PolicyKind::Kw { c0, .. } if !(c0 > 0.0 && c0 <= 0.25) => {
                Err(invalid(format!("c0 must lie in (0, 1/4], got {c0}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    /// Interval the phase tested.
    pub interval: ExactInterval,
    pub decision: Decision,
    pub length: u64,
    pub threshold: Option<f64>,
}

impl PhaseRecord {
    pub fn output(&self) -> ExactInterval {
        match self.decision {
            Decision::TrimLeft => self.interval.trim_left(),
            Decision::TrimRight => self.interval.trim_right(),
            Decision::NoDecision => self.interval.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolicyTrace {
    pub arms: Vec<f64>,
    pub rewards: Vec<f64>,
    /// `n mu_star - sum_{m <= n} mu(arms[m])`, accumulated in round order.
    pub cum_pseudo_regret: Vec<f64>,
    pub phases: Vec<PhaseRecord>,
    pub final_arm: f64,
}

impl PolicyTrace {
    pub fn regret(&self) -> f64 {
        self.cum_pseudo_regret.last().copied().unwrap_or(0.0)
    }
}

/// Samples the environment and records every round.
pub(crate) struct Recorder<'a, R> {
    env: &'a UnimodalEnv,
    rng: R,
    trace: PolicyTrace,
    total: f64,
}

impl<'a, R: Rng> Recorder<'a, R> {
    pub(crate) fn new(env: &'a UnimodalEnv, rng: R, horizon: u64) -> Self {
        let cap = horizon.min(1 << 24) as usize;
        let trace = PolicyTrace {
            arms: Vec::with_capacity(cap),
            rewards: Vec::with_capacity(cap),
            cum_pseudo_regret: Vec::with_capacity(cap),
            ..PolicyTrace::default()
        };
        Self { env, rng, trace, total: 0.0 }
    }

    pub(crate) fn rng(&mut self) -> &mut R {
        &mut self.rng
    }

    pub(crate) fn push_phase(&mut self, phase: PhaseRecord) {
        self.trace.phases.push(phase);
    }

    pub(crate) fn finish(mut self) -> PolicyTrace {
        self.trace.final_arm = self.trace.arms.last().copied().unwrap_or(f64::NAN);
        self.trace
    }
}

impl<R: Rng> RewardSource for Recorder<'_, R> {
    fn pull(&mut self, x: f64) -> f64 {
        let mean = self.env.mean_at(x);
        let reward = self.env.model().sample_unchecked(mean, &mut self.rng);
        self.total += self.env.peak_mean() - mean;
        self.trace.arms.push(x);
        self.trace.rewards.push(reward);
        self.trace.cum_pseudo_regret.push(self.total);
        reward
    }
}

/// Runs any policy for `cfg.horizon` rounds.
pub fn run_policy<R: Rng>(cfg: &PolicyConfig, env: &UnimodalEnv, rng: R) -> Result<PolicyTrace> {
    match cfg.kind {
        PolicyKind::Sp | PolicyKind::SpPrime => run_sp(cfg, env, rng),
        PolicyKind::KlUcb { .. } => run_kl_ucb(cfg, env, rng),
        PolicyKind::Kw { .. } => run_kw(cfg, env, rng),
    }
}

/// `mu_star - mu(final_arm)` for one run.
pub fn final_error(trace: &PolicyTrace, env: &UnimodalEnv) -> Result<f64> {
    Ok(env.peak_mean() - env.eval_mean(trace.final_arm)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use approx::assert_abs_diff_eq;

    fn all_kinds() -> [PolicyKind; 4] {
        [
            PolicyKind::Sp,
            PolicyKind::SpPrime,
            PolicyKind::KlUcb { delta: 0.05, loglog_coeff: DEFAULT_LOGLOG_COEFF },
            PolicyKind::Kw { a0: 1.0, c0: 0.25 },
        ]
    }

    #[test]
    fn final_error_values() {
        let tri = UnimodalEnv::triangular();
        let mut trace = PolicyTrace { final_arm: 0.5, ..PolicyTrace::default() };
        assert_eq!(final_error(&trace, &tri).unwrap(), 0.0);
        trace.final_arm = 0.4;
        assert_abs_diff_eq!(final_error(&trace, &tri).unwrap(), 0.2, epsilon = 1e-12);
        let quad = UnimodalEnv::power_peak(2.0, 0.5).unwrap();
        trace.final_arm = 0.45;
        assert_abs_diff_eq!(final_error(&trace, &quad).unwrap(), 0.01, epsilon = 1e-12);
    }

    #[test]
    fn budget_exactness_and_regret_accounting() {
        let env = UnimodalEnv::power_peak(1.5, 0.4).unwrap();
        for kind in all_kinds() {
            for horizon in [1u64, 2, 3, 7, 5_001] {
                let cfg = PolicyConfig::new(kind, horizon, 0.6).unwrap();
                let trace = run_policy(&cfg, &env, SimRng::new(3)).unwrap();
                assert_eq!(trace.arms.len() as u64, horizon, "{kind:?}");
                assert_eq!(trace.rewards.len() as u64, horizon);
                assert_eq!(trace.final_arm, *trace.arms.last().unwrap());
                let mut sum = 0.0;
                for (n, x) in trace.arms.iter().enumerate() {
                    assert!((0.0..=1.0).contains(x));
                    sum += env.eval_mean(*x).unwrap();
                    let want = (n + 1) as f64 * env.peak_mean() - sum;
                    assert!((trace.cum_pseudo_regret[n] - want).abs() <= 1e-9 * want.max(1.0));
                }
                assert!(trace.cum_pseudo_regret.windows(2).all(|w| w[0] <= w[1]));
                if kind.is_sp() {
                    assert_eq!(trace.phases.iter().map(|p| p.length).sum::<u64>(), horizon);
                }
            }
        }
    }

    #[test]
    fn seed_determinism() {
        let env = UnimodalEnv::power_peak(0.5, 0.5).unwrap();
        for kind in all_kinds() {
            let cfg = PolicyConfig::new(kind, 3_000, 0.6).unwrap();
            let a = run_policy(&cfg, &env, SimRng::new(9)).unwrap();
            let b = run_policy(&cfg, &env, SimRng::new(9)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn config_validation() {
        assert!(PolicyConfig::new(PolicyKind::Sp, 0, 0.6).is_err());
        assert!(PolicyConfig::new(PolicyKind::SpPrime, 10, 0.5).is_err());
        assert!(PolicyConfig::new(PolicyKind::KlUcb { delta: 0.0, loglog_coeff: 3.0 }, 10, 0.6).is_err());
        assert!(PolicyConfig::new(PolicyKind::KlUcb { delta: 1.5, loglog_coeff: 3.0 }, 10, 0.6).is_err());
        assert!(PolicyConfig::new(PolicyKind::Kw { a0: 1.0, c0: 0.3 }, 10, 0.6).is_err());
        assert!(PolicyConfig::new(PolicyKind::Kw { a0: 0.0, c0: 0.25 }, 10, 0.6).is_ok());
        // gamma is irrelevant to the baselines
        assert!(PolicyConfig::new(PolicyKind::Kw { a0: 1.0, c0: 0.25 }, 10, 0.1).is_ok());
    }
}
