use rand::Rng;

use super::{PolicyConfig, PolicyKind, PolicyTrace, Recorder};
use crate::env::UnimodalEnv;
use crate::error::{invalid, Result};
use crate::trim::RewardSource;

/// Kiefer-Wolfowitz finite-difference ascent.
///
/// Iteration `n` queries `x + c_n` then `x - c_n` and moves
/// `x <- clamp(x + (a_n / c_n)(Y+ - Y-), c_n, 1 - c_n)` with `a_n = a0 / n`
/// and `c_n = c0 n^{-1/4}`. The start point is uniform on `[1/4, 3/4]`. An odd
/// horizon ends with a lone `x + c_n` query.
pub fn run_kw<R: Rng>(cfg: &PolicyConfig, env: &UnimodalEnv, rng: R) -> Result<PolicyTrace> {
    cfg.validate()?;
    let PolicyKind::Kw { a0, c0 } = cfg.kind else {
        return Err(invalid(format!("run_kw cannot run {}", cfg.kind.name())));
    };
    let mut recorder = Recorder::new(env, rng, cfg.horizon);
    let mut x = recorder.rng().random_range(0.25..=0.75);
    kw_loop(cfg.horizon, a0, c0, &mut x, &mut recorder);
    Ok(recorder.finish())
}

fn kw_loop<S: RewardSource + ?Sized>(horizon: u64, a0: f64, c0: f64, x: &mut f64, source: &mut S) {
    let mut played = 0u64;
    let mut n = 1u64;
    while played < horizon {
        let c = c0 * (n as f64).powf(-0.25);
        let up = source.pull(*x + c);
        played += 1;
        if played == horizon {
            break;
        }
        let down = source.pull(*x - c);
        played += 1;
        let a = a0 / n as f64;
        *x = (*x + a / c * (up - down)).clamp(c, 1.0 - c);
        n += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;

    #[test]
    fn zero_gradient_keeps_the_point() {
        let mut x = 0.4;
        let mut flat = |_x: f64| 0.5;
        kw_loop(1_000, 1.0, 0.25, &mut x, &mut flat);
        assert_eq!(x, 0.4);
    }

    #[test]
    fn zero_gain_keeps_the_point() {
        let env = UnimodalEnv::power_peak(2.0, 0.5).unwrap();
        let cfg = PolicyConfig::new(PolicyKind::Kw { a0: 0.0, c0: 0.25 }, 2_000, 0.6).unwrap();
        let trace = run_kw(&cfg, &env, SimRng::new(1)).unwrap();
        let x0 = 0.5 * (trace.arms[0] + trace.arms[1]);
        for pair in trace.arms.chunks(2) {
            assert!((0.5 * (pair[0] + pair[1]) - x0).abs() < 1e-12);
        }
    }

    #[test]
    fn start_point_is_seeded() {
        let env = UnimodalEnv::power_peak(2.0, 0.5).unwrap();
        let cfg = PolicyConfig::new(PolicyKind::Kw { a0: 1.0, c0: 0.25 }, 2, 0.6).unwrap();
        let starts: Vec<f64> = (0..20)
            .map(|s| {
                let t = run_kw(&cfg, &env, SimRng::new(s)).unwrap();
                0.5 * (t.arms[0] + t.arms[1])
            })
            .collect();
        assert!(starts.iter().all(|x| (0.25..=0.75).contains(x)));
        assert!(starts.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn odd_horizon_ends_with_single_query() {
        let env = UnimodalEnv::triangular();
        let cfg = PolicyConfig::new(PolicyKind::Kw { a0: 1.0, c0: 0.25 }, 5, 0.6).unwrap();
        let trace = run_kw(&cfg, &env, SimRng::new(2)).unwrap();
        assert_eq!(trace.arms.len(), 5);
    }

    #[test]
    fn converges_on_quadratic() {
        let env = UnimodalEnv::power_peak(2.0, 0.5).unwrap();
        let cfg = PolicyConfig::new(PolicyKind::Kw { a0: 1.0, c0: 0.25 }, 100_000, 0.6).unwrap();
        let mut errs: Vec<f64> = (0..20)
            .map(|s| {
                let t = run_kw(&cfg, &env, SimRng::new(s)).unwrap();
                let n = t.arms.len();
                (0.5 * (t.arms[n - 2] + t.arms[n - 1]) - 0.5).abs()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        assert!(errs[10] < 0.05, "median distance {}", errs[10]);
    }
}
