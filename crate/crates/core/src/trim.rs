//! Sequential interval-trimming tests.
//!
//! A test samples `K` equally spaced interior arms of `[lower, upper]` in
//! round-robin order and stops as soon as the evidence against a peak in one
//! of the two outer slices crosses the threshold `f(s, zeta)`. Up-slope
//! evidence discards the left slice (`[x_1, upper]` is kept); down-slope
//! evidence discards the right slice (`[lower, x_K]` is kept).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::UnimodalEnv;
use crate::error::{domain, invalid, Result};
use crate::isotonic::{i_u_unchecked, TrimSide};
use crate::kl::RewardModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestVariant {
    /// Exact isotonic statistic on any number of arms.
    #[serde(rename = "itk")]
    ItK,
    /// Closed-form two-point statistic on three arms.
    #[serde(rename = "it3prime")]
    It3Prime,
    /// Two interior arms compared against each other.
    TwoPointProbe,
}

impl TestVariant {
    pub fn name(&self) -> &'static str {
        match self {
            TestVariant::ItK => "itk",
            TestVariant::It3Prime => "it3prime",
            TestVariant::TwoPointProbe => "two_point_probe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    TrimLeft,
    TrimRight,
    NoDecision,
}

impl Decision {
    pub fn name(&self) -> &'static str {
        match self {
            Decision::TrimLeft => "trim_left",
            Decision::TrimRight => "trim_right",
            Decision::NoDecision => "no_decision",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimTestConfig {
    pub lower: f64,
    pub upper: f64,
    pub k_arms: usize,
    /// Round budget `s`.
    pub horizon: u64,
    /// Risk budget `zeta`.
    pub risk: f64,
    pub variant: TestVariant,
}

impl TrimTestConfig {
    /// Three-arm test on `[lower, upper]`; two arms for the probe.
    pub fn new(lower: f64, upper: f64, horizon: u64, risk: f64, variant: TestVariant) -> Result<Self> {
        let k_arms = if variant == TestVariant::TwoPointProbe { 2 } else { 3 };
        let cfg = Self { lower, upper, k_arms, horizon, risk, variant };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.lower && self.lower < self.upper && self.upper <= 1.0) {
            return Err(invalid(format!("interval [{}, {}] not inside [0, 1]", self.lower, self.upper)));
        }
        if self.k_arms < 2 {
            return Err(invalid("a trimming test needs at least two arms"));
        }
        match self.variant {
            TestVariant::It3Prime if self.k_arms != 3 => {
                return Err(invalid("the closed-form three-arm test needs k_arms = 3"))
            }
            TestVariant::TwoPointProbe if self.k_arms != 2 => {
                return Err(invalid("the two-point probe needs k_arms = 2"))
            }
            _ => {}
        }
        if self.horizon < 1 {
            return Err(invalid("horizon must be at least one round"));
        }
        if !(self.risk > 0.0 && self.risk < 1.0) {
            return Err(invalid(format!("risk must lie in (0, 1), got {}", self.risk)));
        }
        Ok(())
    }

    /// `x_k = lower + k (upper - lower) / (K + 1)`, `k = 1..=K`.
    pub fn arms(&self) -> Vec<f64> {
        let width = self.upper - self.lower;
        let denom = (self.k_arms + 1) as f64;
        (1..=self.k_arms).map(|k| self.lower + k as f64 * width / denom).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimOutcome {
    pub decision: Decision,
    pub output_interval: (f64, f64),
    /// Rounds consumed.
    pub length: u64,
    pub samples_per_arm: Vec<u64>,
    pub empirical_means: Vec<f64>,
    /// Solved threshold, absent when the budget is below one sweep.
    pub threshold: Option<f64>,
}

/// Source of rewards for an arm.
pub trait RewardSource {
    fn pull(&mut self, x: f64) -> f64;
}

impl<F: FnMut(f64) -> f64> RewardSource for F {
    fn pull(&mut self, x: f64) -> f64 {
        self(x)
    }
}

/// Draws rewards from an environment.
pub struct EnvSampler<'a, R> {
    env: &'a UnimodalEnv,
    rng: R,
}

impl<'a, R: Rng> EnvSampler<'a, R> {
    pub fn new(env: &'a UnimodalEnv, rng: R) -> Self {
        Self { env, rng }
    }
}

impl<R: Rng> RewardSource for EnvSampler<'_, R> {
    fn pull(&mut self, x: f64) -> f64 {
        self.env.model().sample_unchecked(self.env.mean_at(x), &mut self.rng)
    }
}

/// `F(f, s, K) = e^{K + 1 - f} (f ceil(f ln s) / K)^K`.
pub fn f_function(f: f64, s: u64, k: usize) -> Result<f64> {
    if s < 2 {
        return Err(domain(format!("F needs s >= 2, got {s}")));
    }
    if k == 0 {
        return Err(domain("F needs K >= 1"));
    }
    if !(f > 0.0 && f.is_finite()) {
        return Err(domain(format!("F needs a positive threshold, got {f}")));
    }
    let ceil = (f * (s as f64).ln()).ceil();
    Ok(f_segment(f, ceil, k))
}

/// `F` with the ceiling frozen at `ceil`; evaluated in log space.
fn f_segment(f: f64, ceil: f64, k: usize) -> f64 {
    let k = k as f64;
    ((k + 1.0 - f) + k * (f * ceil / k).ln()).exp()
}

/// Smallest `f >= K + 1` with `F(f, s, K) <= zeta`.
///
/// `F` jumps up wherever `f ln s` crosses an integer and is decreasing in
/// between (for `f > K`), so the feasible set is a union of intervals. The
/// segments are scanned left to right; inside the first segment whose right
/// end is feasible the crossing is found by bisection and the feasible end of
/// the final bracket is returned.
pub fn solve_threshold(s: u64, zeta: f64, k: usize) -> Result<f64> {
    if s < 2 {
        return Err(domain(format!("threshold needs s >= 2, got {s}")));
    }
    if k == 0 {
        return Err(domain("threshold needs K >= 1"));
    }
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(domain(format!("zeta must lie in (0, 1), got {zeta}")));
    }
    let log_s = (s as f64).ln();
    let start = (k + 1) as f64;
    if f_function(start, s, k)? <= zeta {
        return Ok(start);
    }
    let feasible = |f: f64| f_function(f, s, k).map(|v| v <= zeta).unwrap_or(false);
    let mut j = (start * log_s).ceil();
    loop {
        // Largest double whose ceiling is still j.
        let mut right = j / log_s;
        while (right * log_s).ceil() > j {
            right = prev_down(right);
        }
        while (next_up(right) * log_s).ceil() <= j {
            right = next_up(right);
        }
        if right >= start && feasible(right) {
            let left = ((j - 1.0) / log_s).max(start);
            let (mut lo, mut hi) = (left, right);
            if feasible(lo) {
                return Ok(lo);
            }
            while next_up(lo) < hi {
                let mid = 0.5 * (lo + hi);
                if feasible(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(hi);
        }
        j += 1.0;
        if j > 1e12 {
            return Err(domain("threshold search did not terminate"));
        }
    }
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

fn prev_down(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// The pair (TrimLeft evidence, TrimRight evidence) before the `min_k t_k`
/// factor is applied.
pub fn trim_statistics(variant: TestVariant, model: RewardModel, means: &[f64]) -> (f64, f64) {
    match variant {
        TestVariant::ItK => {
            let w = vec![1.0; means.len()];
            (
                i_u_unchecked(model, means, &w, TrimSide::Left),
                i_u_unchecked(model, means, &w, TrimSide::Right),
            )
        }
        TestVariant::It3Prime => (
            model.kl_star_unchecked(means[0], means[1]),
            model.kl_star_unchecked(means[2], means[1]),
        ),
        TestVariant::TwoPointProbe => (
            model.kl_star_unchecked(means[0], means[1]),
            model.kl_star_unchecked(means[1], means[0]),
        ),
    }
}

pub(crate) struct RawOutcome {
    pub decision: Decision,
    pub length: u64,
    pub counts: Vec<u64>,
    pub means: Vec<f64>,
    pub threshold: Option<f64>,
}

/// Runs a test on explicit arms.
pub(crate) fn run_on_arms<S: RewardSource + ?Sized>(
    arms: &[f64],
    variant: TestVariant,
    model: RewardModel,
    horizon: u64,
    risk: f64,
    source: &mut S,
) -> Result<RawOutcome> {
    let k = arms.len();
    let mut counts = vec![0u64; k];
    let mut sums = vec![0.0; k];
    let mut means = vec![0.0; k];
    let threshold = if horizon >= k as u64 { Some(solve_threshold(horizon, risk, k)?) } else { None };
    let mut length = 0u64;
    while length < horizon {
        let arm = (length % k as u64) as usize;
        let reward = source.pull(arms[arm]);
        length += 1;
        counts[arm] += 1;
        sums[arm] += reward;
        means[arm] = model.clamp_mean(sums[arm] / counts[arm] as f64);
        let Some(f) = threshold else { continue };
        let min_count = *counts.iter().min().expect("k >= 2");
        if min_count == 0 {
            continue;
        }
        let (left, right) = trim_statistics(variant, model, &means);
        let scale = min_count as f64;
        let decision = if scale * left >= f {
            Decision::TrimLeft
        } else if scale * right >= f {
            Decision::TrimRight
        } else {
            continue;
        };
        return Ok(RawOutcome { decision, length, counts, means, threshold });
    }
    Ok(RawOutcome { decision: Decision::NoDecision, length, counts, means, threshold })
}

fn finish(cfg: &TrimTestConfig, arms: &[f64], raw: RawOutcome) -> TrimOutcome {
    let output_interval = match raw.decision {
        Decision::TrimLeft => (arms[0], cfg.upper),
        Decision::TrimRight => (cfg.lower, arms[arms.len() - 1]),
        Decision::NoDecision => (cfg.lower, cfg.upper),
    };
    TrimOutcome {
        decision: raw.decision,
        output_interval,
        length: raw.length,
        samples_per_arm: raw.counts,
        empirical_means: raw.means,
        threshold: raw.threshold,
    }
}

/// Runs the configured test against an arbitrary reward source.
pub fn run_trim_test_with<S: RewardSource + ?Sized>(
    cfg: &TrimTestConfig,
    model: RewardModel,
    source: &mut S,
) -> Result<TrimOutcome> {
    cfg.validate()?;
    model.validate()?;
    let arms = cfg.arms();
    let raw = run_on_arms(&arms, cfg.variant, model, cfg.horizon, cfg.risk, source)?;
    Ok(finish(cfg, &arms, raw))
}

pub fn run_trim_test<R: Rng>(cfg: &TrimTestConfig, env: &UnimodalEnv, rng: R) -> Result<TrimOutcome> {
    let mut source = EnvSampler::new(env, rng);
    run_trim_test_with(cfg, env.model(), &mut source)
}

pub fn run_two_point_probe<R: Rng>(cfg: &TrimTestConfig, env: &UnimodalEnv, rng: R) -> Result<TrimOutcome> {
    if cfg.variant != TestVariant::TwoPointProbe {
        return Err(invalid("run_two_point_probe needs the two_point_probe variant"));
    }
    run_trim_test(cfg, env, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use approx::assert_abs_diff_eq;

    const B: RewardModel = RewardModel::Bernoulli;

    #[test]
    fn f_function_values() {
        // ceil(4 ln 100) = 19
        let want = (4.0f64 * 19.0 / 3.0).powi(3);
        assert_abs_diff_eq!(f_function(4.0, 100, 3).unwrap(), want, epsilon = want * 1e-12);
        assert_abs_diff_eq!(want, 16258.370370370, epsilon = 1e-6);
        for s in [2u64, 3, 10, 1000, 1_000_000_000] {
            assert!(f_function(4.0, s, 3).unwrap() >= 1.0);
        }
        assert!(f_function(200.0, 1000, 3).unwrap() < 1e-50);
        assert!(f_function(4.0, 1, 3).is_err());
        assert!(solve_threshold(1, 0.1, 3).is_err());
    }

    #[test]
    fn threshold_is_minimal() {
        for s in [1_000u64, 100_000] {
            for zeta in [0.1, 1e-3] {
                let f = solve_threshold(s, zeta, 3).unwrap();
                assert!(f_function(f, s, 3).unwrap() <= zeta);
                assert!(f_function(f - 1e-3, s, 3).unwrap() > zeta);
                // nothing feasible below f on a fine scan
                let mut g = 4.0;
                while g < f - 1e-9 {
                    assert!(f_function(g, s, 3).unwrap() > zeta, "feasible at {g} < {f}");
                    g += 1e-3;
                }
            }
        }
    }

    #[test]
    fn lower_endpoint_never_feasible_below_one() {
        // F(K + 1, s, K) >= 1 > zeta, so the solver always moves past K + 1.
        for s in [2u64, 5, 100, 1_000_000] {
            for k in [1usize, 2, 3, 5] {
                assert!(f_function((k + 1) as f64, s, k).unwrap() >= 1.0);
                assert!(solve_threshold(s, 0.999, k).unwrap() > (k + 1) as f64);
            }
        }
    }

    fn scripted(pattern: [f64; 3], lower: f64, upper: f64) -> impl FnMut(f64) -> f64 {
        let width = upper - lower;
        move |x: f64| {
            let k = ((x - lower) / width * 4.0).round() as usize;
            pattern[k - 1]
        }
    }

    #[test]
    fn scripted_peak_stops_at_predicted_round() {
        for variant in [TestVariant::ItK, TestVariant::It3Prime] {
            let cfg = TrimTestConfig::new(0.0, 1.0, 10_000, 0.05, variant).unwrap();
            let mut source = scripted([0.0, 1.0, 0.0], 0.0, 1.0);
            let out = run_trim_test_with(&cfg, B, &mut source).unwrap();
            let f = solve_threshold(10_000, 0.05, 3).unwrap();
            let per_arm = (f / (2.0 * std::f64::consts::LN_2)).ceil() as u64;
            assert_eq!(out.length, 3 * per_arm, "{variant:?}");
            // both sides cross together; ties go left
            assert_eq!(out.decision, Decision::TrimLeft);
            assert_eq!(out.output_interval, (0.25, 1.0));
            assert_eq!(out.samples_per_arm, vec![per_arm; 3]);
        }
    }

    #[test]
    fn scripted_slopes() {
        let cfg = TrimTestConfig::new(0.0, 1.0, 10_000, 0.05, TestVariant::It3Prime).unwrap();
        let out = run_trim_test_with(&cfg, B, &mut scripted([0.0, 1.0, 1.0], 0.0, 1.0)).unwrap();
        assert_eq!(out.decision, Decision::TrimLeft);
        let out = run_trim_test_with(&cfg, B, &mut scripted([1.0, 1.0, 0.0], 0.0, 1.0)).unwrap();
        assert_eq!(out.decision, Decision::TrimRight);
        assert_eq!(out.output_interval, (0.0, 0.75));
        let probe = TrimTestConfig::new(0.0, 1.0, 10_000, 0.05, TestVariant::TwoPointProbe).unwrap();
        let mut rising = |x: f64| if x < 0.5 { 0.0 } else { 1.0 };
        let out = run_trim_test_with(&probe, B, &mut rising).unwrap();
        assert_eq!(out.decision, Decision::TrimLeft);
        assert!(out.length < 100);
    }

    #[test]
    fn short_budgets() {
        let env = UnimodalEnv::triangular();
        let probe = TrimTestConfig::new(0.0, 1.0, 1, 0.05, TestVariant::TwoPointProbe).unwrap();
        let out = run_two_point_probe(&probe, &env, SimRng::new(1)).unwrap();
        assert_eq!(out.decision, Decision::NoDecision);
        assert_eq!(out.length, 1);
        assert_eq!(out.threshold, None);
        let cfg = TrimTestConfig::new(0.0, 1.0, 3, 0.05, TestVariant::ItK).unwrap();
        let out = run_trim_test(&cfg, &env, SimRng::new(1)).unwrap();
        assert_eq!(out.decision, Decision::NoDecision);
        assert_eq!(out.samples_per_arm, vec![1, 1, 1]);
        assert_eq!(out.output_interval, (0.0, 1.0));
    }

    #[test]
    fn outcome_invariants() {
        let env = UnimodalEnv::power_peak(1.0, 0.3).unwrap();
        for seed in 0..50 {
            let cfg = TrimTestConfig::new(0.0, 1.0, 2_000, 0.1, TestVariant::ItK).unwrap();
            let out = run_trim_test(&cfg, &env, SimRng::new(seed)).unwrap();
            assert!(out.length <= 2_000);
            assert_eq!(out.samples_per_arm.iter().sum::<u64>(), out.length);
            let (lo, hi) = (out.samples_per_arm.iter().min().unwrap(), out.samples_per_arm.iter().max().unwrap());
            assert!(hi - lo <= 1);
            assert_eq!(out.decision == Decision::NoDecision, out.output_interval == (0.0, 1.0));
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrimTestConfig::new(0.5, 0.5, 10, 0.1, TestVariant::ItK).is_err());
        assert!(TrimTestConfig::new(0.0, 1.0, 0, 0.1, TestVariant::ItK).is_err());
        assert!(TrimTestConfig::new(0.0, 1.0, 10, 1.0, TestVariant::ItK).is_err());
        let mut cfg = TrimTestConfig::new(0.0, 1.0, 10, 0.1, TestVariant::It3Prime).unwrap();
        cfg.k_arms = 4;
        assert!(cfg.validate().is_err());
        cfg.variant = TestVariant::ItK;
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.arms(), vec![0.2, 0.4, 0.6, 0.8]);
        let env = UnimodalEnv::triangular();
        assert!(run_two_point_probe(&cfg, &env, SimRng::new(0)).is_err());
    }

    #[test]
    fn exact_statistic_never_stops_later() {
        let env = UnimodalEnv::power_peak(1.0, 0.7).unwrap();
        for seed in 0..30 {
            let mut lengths = Vec::new();
            for variant in [TestVariant::ItK, TestVariant::It3Prime] {
                let cfg = TrimTestConfig::new(0.0, 1.0, 5_000, 0.05, variant).unwrap();
                lengths.push(run_trim_test(&cfg, &env, SimRng::new(seed)).unwrap().length);
            }
            assert!(lengths[0] <= lengths[1], "seed {seed}: {lengths:?}");
        }
    }
}
