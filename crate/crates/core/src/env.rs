//! Ground-truth unimodal mean functions on [0, 1].

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::kl::RewardModel;

/// Shape of a unimodal mean function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    /// `mu(x) = 1 - (|x - xstar| / w)^xi` with `w = max(xstar, 1 - xstar)`,
    /// so that `xstar = 1/2` gives `1 - (2|1/2 - x|)^xi`.
    PowerPeak { xi: f64, xstar: f64 },
    /// Linear interpolation through `(x, mu)` knots spanning [0, 1].
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

/// Structural constants `(C1, C2, xi)` of the class `U(C1, C2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub c1: f64,
    pub c2: f64,
    pub xi: f64,
}

impl ClassParams {
    /// `a_xi = 4^{-xi} min(1, 2^xi - 1)`.
    pub fn a_xi(&self) -> f64 {
        4f64.powf(-self.xi) * 1f64.min(2f64.powf(self.xi) - 1.0)
    }
}

/// A unimodal environment: mean function plus reward family.
#[derive(Debug, Clone, PartialEq)]
pub struct UnimodalEnv {
    shape: Shape,
    model: RewardModel,
    peak: f64,
    peak_mean: f64,
    // 1 / max(xstar, 1 - xstar) for PowerPeak
    scale: f64,
}

impl UnimodalEnv {
    pub fn new(shape: Shape, model: RewardModel) -> Result<Self> {
        model.validate()?;
        let (peak, scale) = match &shape {
            Shape::PowerPeak { xi, xstar } => {
                if !(*xi > 0.0 && xi.is_finite()) {
                    return Err(invalid(format!("power peak needs xi > 0, got {xi}")));
                }
                if !(0.0..=1.0).contains(xstar) {
                    return Err(invalid(format!("power peak needs xstar in [0, 1], got {xstar}")));
                }
                (*xstar, 1.0 / xstar.max(1.0 - xstar))
            }
            Shape::PiecewiseLinear { knots } => (validate_knots(knots)?, f64::NAN),
        };
        let mut env = UnimodalEnv { shape, model, peak, peak_mean: f64::NAN, scale };
        env.peak_mean = env.mean_at(peak);
        if let Shape::PiecewiseLinear { knots } = &env.shape {
            for &(x, m) in knots {
                if !model.is_valid_mean(m) {
                    return Err(invalid(format!(
                        "knot ({x}, {m}) outside the {} mean domain",
                        model.name()
                    )));
                }
            }
        }
        Ok(env)
    }

    /// Bernoulli `1 - (|x - xstar| / max(xstar, 1 - xstar))^xi`.
    pub fn power_peak(xi: f64, xstar: f64) -> Result<Self> {
        Self::new(Shape::PowerPeak { xi, xstar }, RewardModel::Bernoulli)
    }

    /// Bernoulli triangle `1 - 2|1/2 - x|`.
    pub fn triangular() -> Self {
        Self::power_peak(1.0, 0.5).expect("valid shape")
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn model(&self) -> RewardModel {
        self.model
    }

    /// Location of the maximizer.
    pub fn peak(&self) -> f64 {
        self.peak
    }

    /// Maximal mean reward.
    pub fn peak_mean(&self) -> f64 {
        self.peak_mean
    }

    /// Exponent `xi` of a power-peak shape.
    pub fn xi(&self) -> Option<f64> {
        match self.shape {
            Shape::PowerPeak { xi, .. } => Some(xi),
            Shape::PiecewiseLinear { .. } => None,
        }
    }

    pub fn eval_mean(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(domain(format!("arm {x} outside [0, 1]")));
        }
        Ok(self.mean_at(x))
    }

    /// Mean at `x`; `x` must lie in [0, 1].
    pub(crate) fn mean_at(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::PowerPeak { xi, .. } => {
                let m = 1.0 - ((x - self.peak).abs() * self.scale).powf(*xi);
                self.model.clamp_mean(m)
            }
            Shape::PiecewiseLinear { knots } => interpolate(knots, x),
        }
    }

    fn mean_clamped(&self, x: f64) -> f64 {
        self.mean_at(x.clamp(0.0, 1.0))
    }

    /// Worst gap at distance `delta` from the peak:
    /// `mu* - min(mu(x* - delta), mu(x* + delta))`, arguments clamped to [0, 1].
    pub fn g_mu(&self, delta: f64) -> f64 {
        let lo = self.mean_clamped(self.peak - delta);
        let hi = self.mean_clamped(self.peak + delta);
        self.peak_mean - lo.min(hi)
    }

    /// Smallest drop over a step of `delta/4` within `delta/4` of the peak:
    /// `min{ min_{x in [x*, x*+delta/4]} mu(x) - mu(x + delta/4),
    ///       min_{x in [x*-delta/4, x*]} mu(x) - mu(x - delta/4) }`.
    pub fn h_mu(&self, delta: f64) -> f64 {
        let q = delta / 4.0;
        match self.shape {
            Shape::PowerPeak { xi, .. }
                if self.peak - 2.0 * q >= 0.0 && self.peak + 2.0 * q <= 1.0 =>
            {
                // The drop over a step of q is monotone in the start point:
                // smallest at the peak for xi >= 1, one step out for xi < 1.
                let start = if xi >= 1.0 { self.peak } else { self.peak + q };
                self.mean_at(start) - self.mean_at(start + q)
            }
            _ => self.h_mu_numeric(delta),
        }
    }

    /// [`UnimodalEnv::h_mu`] by grid search plus golden-section refinement.
    pub fn h_mu_numeric(&self, delta: f64) -> f64 {
        let q = delta / 4.0;
        let x = self.peak;
        let right = minimize_1d(|t| self.mean_clamped(t) - self.mean_clamped(t + q), x, (x + q).min(1.0));
        let left = minimize_1d(|t| self.mean_clamped(t) - self.mean_clamped(t - q), (x - q).max(0.0), x);
        right.min(left)
    }

    pub fn class_params(&self) -> Result<ClassParams> {
        match self.shape {
            Shape::PowerPeak { xi, .. } => {
                // mu* - mu(x) = scale^xi |x - x*|^xi, so (P1) and (P2) are tight with C = scale^xi.
                let c = self.scale.powf(xi);
                Ok(ClassParams { c1: c, c2: c, xi })
            }
            Shape::PiecewiseLinear { .. } => Err(Error::UnsupportedShape(
                "unknown class constants for piecewise-linear shapes".into(),
            )),
        }
    }
}

fn validate_knots(knots: &[(f64, f64)]) -> Result<f64> {
    if knots.len() < 2 {
        return Err(invalid("piecewise-linear shape needs at least two knots"));
    }
    if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
        return Err(invalid("piecewise-linear knots must start at x = 0 and end at x = 1"));
    }
    if knots.iter().any(|&(x, m)| !x.is_finite() || !m.is_finite()) {
        return Err(invalid("piecewise-linear knots must be finite"));
    }
    if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(invalid("piecewise-linear knots must have strictly increasing x"));
    }
    let top = knots
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .expect("nonempty");
    let rising = knots[..=top].windows(2).all(|w| w[1].1 > w[0].1);
    let falling = knots[top..].windows(2).all(|w| w[1].1 < w[0].1);
    if !(rising && falling) {
        return Err(invalid("piecewise-linear knots are not strictly unimodal"));
    }
    Ok(knots[top].0)
}

fn interpolate(knots: &[(f64, f64)], x: f64) -> f64 {
    let i = knots.partition_point(|&(kx, _)| kx <= x);
    if i == 0 {
        return knots[0].1;
    }
    if i == knots.len() {
        return knots[knots.len() - 1].1;
    }
    let (x0, y0) = knots[i - 1];
    let (x1, y1) = knots[i];
    if x == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Global minimum of `f` on `[a, b]` via a dense grid then golden-section
/// refinement between the neighbours of the best grid point.
fn minimize_1d(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const GRID: usize = 2000;
    if !(b > a) {
        return f(a);
    }
    let step = (b - a) / GRID as f64;
    let (best_i, mut best) = (0..=GRID)
        .map(|i| (i, f(a + step * i as f64)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let mut lo = a + step * best_i.saturating_sub(1) as f64;
    let mut hi = (a + step * (best_i + 1) as f64).min(b);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    best = best.min(fc).min(fd);
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn peak(xi: f64) -> UnimodalEnv {
        UnimodalEnv::power_peak(xi, 0.5).unwrap()
    }

    fn tri_knots() -> UnimodalEnv {
        UnimodalEnv::new(
            Shape::PiecewiseLinear { knots: vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)] },
            RewardModel::Bernoulli,
        )
        .unwrap()
    }

    #[test]
    fn eval_reference_values() {
        assert_eq!(peak(0.5).eval_mean(0.5).unwrap(), 1.0);
        assert_eq!(peak(2.0).eval_mean(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(peak(1.0).eval_mean(0.3).unwrap(), 0.6, epsilon = 1e-15);
        assert!(peak(1.0).eval_mean(1.01).is_err());
        assert!(peak(1.0).eval_mean(-0.01).is_err());
    }

    #[test]
    fn centered_peak_matches_formula_exactly() {
        for &xi in &[0.5, 1.0, 2.0, 3.7] {
            let env = peak(xi);
            for i in 0..=1000 {
                let x = i as f64 / 1000.0;
                let want = 1.0 - (2.0 * (0.5 - x).abs()).powf(xi);
                assert_eq!(env.eval_mean(x).unwrap(), want);
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(UnimodalEnv::power_peak(0.0, 0.5).is_err());
        assert!(UnimodalEnv::power_peak(1.0, 1.5).is_err());
        let bad = |knots: Vec<(f64, f64)>| {
            UnimodalEnv::new(Shape::PiecewiseLinear { knots }, RewardModel::Bernoulli).is_err()
        };
        assert!(bad(vec![(0.0, 0.5)]));
        assert!(bad(vec![(0.1, 0.0), (1.0, 0.5)]));
        assert!(bad(vec![(0.0, 0.2), (0.5, 0.2), (1.0, 0.0)]));
        assert!(bad(vec![(0.0, 0.2), (0.3, 0.6), (0.6, 0.3), (1.0, 0.5)]));
        assert!(bad(vec![(0.0, 0.2), (0.5, 1.4), (1.0, 0.0)]));
    }

    #[test]
    fn piecewise_linear_interpolates() {
        let env = tri_knots();
        assert_eq!(env.peak(), 0.5);
        assert_eq!(env.peak_mean(), 1.0);
        assert_abs_diff_eq!(env.eval_mean(0.3).unwrap(), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(env.eval_mean(0.9).unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(env.eval_mean(1.0).unwrap(), 0.0);
    }

    #[test]
    fn g_mu_reference_values() {
        assert_abs_diff_eq!(peak(1.0).g_mu(0.1), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(peak(2.0).g_mu(0.1), 0.04, epsilon = 1e-12);
        assert!(peak(0.5).g_mu(1e-14) < 1e-6);
        // clamped: x* + 0.7 leaves [0, 1]
        assert_eq!(peak(1.0).g_mu(0.7), 1.0);
    }

    #[test]
    fn g_mu_uses_the_worse_side() {
        let env = UnimodalEnv::new(
            Shape::PiecewiseLinear { knots: vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.8)] },
            RewardModel::Bernoulli,
        )
        .unwrap();
        // left drop 0.2, right drop 0.04
        assert_abs_diff_eq!(env.g_mu(0.1), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn h_mu_reference_values() {
        assert_abs_diff_eq!(peak(1.0).h_mu(0.2), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(tri_knots().h_mu(0.2), 0.1, epsilon = 1e-12);
        for &xi in &[1.0, 1.5, 2.0, 3.0] {
            let c1 = 2f64.powf(xi);
            for &d in &[0.01f64, 0.1, 0.3, 1.0] {
                assert_abs_diff_eq!(peak(xi).h_mu(d), c1 * (d / 4.0).powf(xi), epsilon = 1e-12);
            }
        }
        for &xi in &[0.25, 0.5, 0.9] {
            let c1 = 2f64.powf(xi);
            for &d in &[0.01f64, 0.1, 0.3, 1.0] {
                let want = c1 * (2f64.powf(xi) - 1.0) * (d / 4.0).powf(xi);
                assert_abs_diff_eq!(peak(xi).h_mu(d), want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn h_mu_closed_form_agrees_with_numeric() {
        for &xi in &[0.3, 0.5, 1.0, 2.0, 4.0] {
            let env = peak(xi);
            for &d in &[0.002, 0.05, 0.2, 0.7, 1.0] {
                let exact = env.h_mu(d);
                let numeric = env.h_mu_numeric(d);
                assert!((exact - numeric).abs() <= 1e-9 * exact.max(1e-12) + 1e-13,
                    "xi={xi} d={d}: {exact} vs {numeric}");
            }
        }
    }

    #[test]
    fn class_params_reference_values() {
        let p = peak(1.0).class_params().unwrap();
        assert_eq!((p.c1, p.c2, p.xi), (2.0, 2.0, 1.0));
        let p = peak(2.0).class_params().unwrap();
        assert_eq!((p.c1, p.c2, p.xi), (4.0, 4.0, 2.0));
        let p = peak(0.5).class_params().unwrap();
        assert_abs_diff_eq!(p.c1, 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(p.c1, p.c2);
        assert!(matches!(tri_knots().class_params(), Err(Error::UnsupportedShape(_))));
    }

    #[test]
    fn constructed_envs_are_strictly_unimodal() {
        let envs = vec![
            peak(0.5),
            peak(1.0),
            peak(2.0),
            UnimodalEnv::power_peak(1.0, 0.05).unwrap(),
            UnimodalEnv::power_peak(0.7, 0.8).unwrap(),
            tri_knots(),
        ];
        let n = 10_000;
        for env in envs {
            let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            for w in xs.windows(2) {
                let (a, b) = (env.eval_mean(w[0]).unwrap(), env.eval_mean(w[1]).unwrap());
                if w[1] <= env.peak() {
                    assert!(b - a > 1e-12, "{:?} not increasing at {}", env.shape(), w[0]);
                } else if w[0] >= env.peak() {
                    assert!(a - b > 1e-12, "{:?} not decreasing at {}", env.shape(), w[0]);
                }
            }
        }
    }

    #[test]
    fn g_nondecreasing_and_h_positive() {
        for env in [peak(0.5), peak(1.0), peak(2.0), tri_knots()] {
            let deltas: Vec<f64> = (1..=500).map(|i| i as f64 / 1000.0).collect();
            for w in deltas.windows(2) {
                assert!(env.g_mu(w[1]) >= env.g_mu(w[0]));
            }
            for &d in &deltas {
                assert!(env.h_mu(d) > 0.0);
            }
        }
    }

    #[test]
    fn class_bounds_hold_on_log_grid() {
        for &xi in &[0.25, 0.5, 1.0, 2.0, 3.0] {
            let env = peak(xi);
            let p = env.class_params().unwrap();
            for i in 0..=60 {
                // 1e-3 .. 0.5
                let d = 1e-3 * (500f64).powf(i as f64 / 60.0);
                let g_bound = p.c2 * d.powf(xi);
                let h_bound = p.c1 * p.a_xi() * d.powf(xi);
                // 1 - mu(x) cancels to within a few ulps of 1
                assert!(env.g_mu(d) <= g_bound * (1.0 + 1e-12) + 1e-15, "g xi={xi} d={d}");
                assert!(env.h_mu(d) >= h_bound * (1.0 - 1e-12) - 1e-15, "h xi={xi} d={d}");
            }
        }
    }
}
