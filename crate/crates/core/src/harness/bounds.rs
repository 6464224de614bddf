//! Closed-form regret and optimization-error guarantees for the phased policy.
//!
//! `f_bar` is the solved threshold `solve_threshold(T, T^{-gamma}, 3)`.

use crate::env::{ClassParams, UnimodalEnv};
use crate::error::{domain, Result};
use crate::trim::solve_threshold;

/// Interval shrink factor of one trimming phase.
pub const PSI: f64 = 0.75;

/// Largest phase count tried by [`regret_bound_generic`].
pub const MAX_PHASES: u32 = 200;

fn check(params: &ClassParams, horizon: u64, gamma: f64) -> Result<()> {
    if horizon < 2 {
        return Err(domain(format!("bounds need T >= 2, got {horizon}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(domain(format!("gamma must be positive, got {gamma}")));
    }
    if !(params.c1 > 0.0 && params.c1 <= params.c2 && params.xi > 0.0) {
        return Err(domain(format!("invalid class constants {params:?}")));
    }
    Ok(())
}

fn f_bar(horizon: u64, gamma: f64) -> Result<f64> {
    solve_threshold(horizon, (horizon as f64).powf(-gamma), 3)
}

/// Cost of the phases that may trim the peak away.
fn risk_term(params: &ClassParams, peak_mean: f64, horizon: u64, gamma: f64) -> f64 {
    let t = horizon as f64;
    let xi = params.xi;
    peak_mean * t.powf(-gamma) * (t * params.c1 * PSI.powf(-xi)).ln() / (xi * (1.0 / PSI).ln())
}

/// `2 psi^{-3 xi / 2} C2 / (C1 a_xi) sqrt(3 T (f_bar + 32) / (psi^{-xi} - 1))
///  + mu_star T^{1 - gamma} log(T C1 psi^{-xi}) / (xi log(1 / psi))`.
pub fn regret_bound(params: &ClassParams, peak_mean: f64, horizon: u64, gamma: f64) -> Result<f64> {
    check(params, horizon, gamma)?;
    let t = horizon as f64;
    let xi = params.xi;
    let lead = 2.0 * PSI.powf(-1.5 * xi) * params.c2 / (params.c1 * params.a_xi());
    let root = (3.0 * t * (f_bar(horizon, gamma)? + 32.0) / (PSI.powf(-xi) - 1.0)).sqrt();
    Ok(lead * root + t * risk_term(params, peak_mean, horizon, gamma))
}

/// `min_N mu_star N T^{1 - gamma} + T g(psi^N) + 3 (f_bar + 32) sum_{N' < N} g(psi^N') / h(psi^N')^2`
/// over `N` in `0..=200`.
pub fn regret_bound_generic(env: &UnimodalEnv, horizon: u64, gamma: f64) -> Result<f64> {
    if horizon < 2 {
        return Err(domain(format!("bounds need T >= 2, got {horizon}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(domain(format!("gamma must be positive, got {gamma}")));
    }
    let t = horizon as f64;
    let per_phase = 3.0 * (f_bar(horizon, gamma)? + 32.0);
    let mut best = f64::INFINITY;
    let mut sum = 0.0;
    for n in 0..=MAX_PHASES {
        let width = PSI.powi(n as i32);
        let value = env.peak_mean() * n as f64 * t.powf(1.0 - gamma) + t * env.g_mu(width) + per_phase * sum;
        best = best.min(value);
        let h = env.h_mu(width);
        sum += env.g_mu(width) / (h * h);
    }
    Ok(best)
}

/// `(C2 / (C1 a_xi)) sqrt(24 f_bar / (T (psi^{-2 xi} - 1)))
///  + 3 T^{-gamma} mu_star log(T C1 psi^{-xi}) / (xi log(1 / psi))`.
pub fn error_bound(params: &ClassParams, peak_mean: f64, horizon: u64, gamma: f64) -> Result<f64> {
    check(params, horizon, gamma)?;
    let t = horizon as f64;
    let xi = params.xi;
    let lead = params.c2 / (params.c1 * params.a_xi());
    let root = (24.0 * f_bar(horizon, gamma)? / (t * (PSI.powf(-2.0 * xi) - 1.0))).sqrt();
    Ok(lead * root + 3.0 * risk_term(params, peak_mean, horizon, gamma))
}
