use rand::Rng;

use super::{PhaseRecord, PolicyConfig, PolicyKind, PolicyTrace, Recorder};
use crate::env::UnimodalEnv;
use crate::error::{invalid, Result};
use crate::interval::ExactInterval;
use crate::trim::{run_on_arms, Decision, TestVariant};

/// Runs phases of the three-arm test on a shrinking interval.
///
/// Every phase gets the whole remaining budget as its horizon and the risk
/// `T^{-gamma}` computed from the full horizon. A phase that ends without a
/// decision has used the remaining budget, which ends the run.
pub fn run_sp<R: Rng>(cfg: &PolicyConfig, env: &UnimodalEnv, rng: R) -> Result<PolicyTrace> {
    cfg.validate()?;
    let variant = match cfg.kind {
        PolicyKind::Sp => TestVariant::ItK,
        PolicyKind::SpPrime => TestVariant::It3Prime,
        other => return Err(invalid(format!("run_sp cannot run {}", other.name()))),
    };
    let risk = (cfg.horizon as f64).powf(-cfg.gamma);
    let mut recorder = Recorder::new(env, rng, cfg.horizon);
    let mut interval = ExactInterval::unit();
    let mut remaining = cfg.horizon;
    while remaining > 0 {
        let arms = interval.quartiles();
        let raw = run_on_arms(&arms, variant, env.model(), remaining, risk, &mut recorder)?;
        remaining -= raw.length;
        let phase = PhaseRecord { interval, decision: raw.decision, length: raw.length, threshold: raw.threshold };
        interval = phase.output();
        recorder.push_phase(phase);
        if raw.decision == Decision::NoDecision {
            break;
        }
    }
    Ok(recorder.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use crate::trim::{solve_threshold, RewardSource};

    #[test]
    fn tiny_horizon_is_one_incomplete_phase() {
        let env = UnimodalEnv::power_peak(1.0, 0.2).unwrap();
        let cfg = PolicyConfig::new(PolicyKind::Sp, 3, 0.6).unwrap();
        let trace = run_sp(&cfg, &env, SimRng::new(0)).unwrap();
        assert_eq!(trace.arms, vec![0.25, 0.5, 0.75]);
        assert_eq!(trace.phases.len(), 1);
        assert_eq!(trace.phases[0].decision, Decision::NoDecision);
        assert_eq!(trace.phases[0].output(), ExactInterval::unit());
    }

    #[test]
    fn phases_nest_by_three_quarters() {
        let env = UnimodalEnv::power_peak(1.0, 0.3).unwrap();
        for kind in [PolicyKind::Sp, PolicyKind::SpPrime] {
            let cfg = PolicyConfig::new(kind, 200_000, 0.6).unwrap();
            let trace = run_sp(&cfg, &env, SimRng::new(5)).unwrap();
            assert!(trace.phases.len() >= 5, "only {} phases", trace.phases.len());
            for pair in trace.phases.windows(2) {
                assert_ne!(pair[0].decision, Decision::NoDecision);
                assert!(pair[0].interval.is_quarter_trim_of(&pair[1].interval));
                assert_eq!(pair[0].output(), pair[1].interval);
            }
            let risk = 200_000f64.powf(-0.6);
            let mut remaining = 200_000;
            for phase in &trace.phases {
                assert_eq!(phase.threshold, Some(solve_threshold(remaining, risk, 3).unwrap()));
                remaining -= phase.length;
            }
        }
    }

    /// Drives the recorder's arm choices with a scripted stream and checks
    /// the interval lengths.
    #[test]
    fn scripted_alternating_trims() {
        let env = UnimodalEnv::triangular();
        let risk = 100_000f64.powf(-0.6);
        let mut recorder = Recorder::new(&env, SimRng::new(0), 100_000);
        let mut interval = ExactInterval::unit();
        let mut remaining = 100_000u64;
        for n in 0..12 {
            let arms = interval.quartiles();
            let pattern = if n % 2 == 0 { [0.0, 1.0, 1.0] } else { [1.0, 1.0, 0.0] };
            let mut script = |x: f64| {
                recorder.pull(x);
                pattern[arms.iter().position(|a| *a == x).unwrap()]
            };
            let raw = run_on_arms(&arms, TestVariant::It3Prime, env.model(), remaining, risk, &mut script).unwrap();
            let want = if n % 2 == 0 { Decision::TrimLeft } else { Decision::TrimRight };
            assert_eq!(raw.decision, want);
            remaining -= raw.length;
            let next = if want == Decision::TrimLeft { interval.trim_left() } else { interval.trim_right() };
            assert!(interval.is_quarter_trim_of(&next));
            interval = next;
            let expected = 0.75f64.powi(n + 1);
            assert!((interval.len() - expected).abs() <= 1e-15 * expected);
        }
        let trace = recorder.finish();
        assert_eq!(trace.arms.len() as u64, 100_000 - remaining);
    }

    #[test]
    fn rejects_baseline_kind() {
        let env = UnimodalEnv::triangular();
        let cfg = PolicyConfig::new(PolicyKind::Kw { a0: 1.0, c0: 0.25 }, 10, 0.6).unwrap();
        assert!(run_sp(&cfg, &env, SimRng::new(0)).is_err());
    }
}
