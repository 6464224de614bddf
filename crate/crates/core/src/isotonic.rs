//! Order-constrained fits under the KL loss and the `i_u` trimming statistic.
//!
//! For a one-parameter exponential family the minimizer of
//! `sum_k w_k KL(v_k, c)` over a constant `c` is the weighted mean of the
//! `v_k`, so pool-adjacent-violators with weighted means gives the exact
//! monotone fit, as it does for squared error.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::kl::RewardModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
}

/// Which outer slice of the interval a trimming decision discards.
///
/// `Left` is up-slope evidence: the alternative it rejects has its peak left
/// of the first sampled arm, which forces a nonincreasing profile on the arms.
/// `Right` is the mirror image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrimSide {
    Left,
    Right,
}

impl TrimSide {
    /// Monotonicity the rejected alternatives impose on the sampled arms.
    pub fn alternative_direction(self) -> Direction {
        match self {
            TrimSide::Left => Direction::NonIncreasing,
            TrimSide::Right => Direction::NonDecreasing,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneFit {
    pub fitted: Vec<f64>,
    /// Pooled runs, in order, covering `0..K`.
    pub blocks: Vec<Range<usize>>,
    /// `sum_k w_k KL(values_k, fitted_k)`.
    pub objective: f64,
}

fn check_inputs(model: RewardModel, values: &[f64], weights: &[f64]) -> Result<()> {
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch { values: values.len(), weights: weights.len() });
    }
    if values.is_empty() {
        return Err(domain("monotone fit needs at least one value"));
    }
    for &v in values {
        model.check_mean(v)?;
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(domain(format!("weights must be positive, got {w}")));
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct Block {
    start: usize,
    end: usize,
    weight: f64,
    weighted_sum: f64,
    mean: f64,
}

fn pool(model: RewardModel, values: &[f64], weights: &[f64], direction: Direction) -> Vec<Block> {
    let violates = |prev: f64, cur: f64| match direction {
        Direction::NonIncreasing => prev < cur,
        Direction::NonDecreasing => prev > cur,
    };
    let mut stack: Vec<Block> = Vec::with_capacity(values.len());
    for (k, (&v, &w)) in values.iter().zip(weights).enumerate() {
        // A singleton keeps its value exactly; w * v / w can be off by an ulp.
        let mut cur = Block { start: k, end: k + 1, weight: w, weighted_sum: w * v, mean: v };
        while let Some(prev) = stack.last() {
            if !violates(prev.mean, cur.mean) {
                break;
            }
            let prev = stack.pop().expect("checked");
            let weight = prev.weight + cur.weight;
            let weighted_sum = prev.weighted_sum + cur.weighted_sum;
            cur = Block {
                start: prev.start,
                end: cur.end,
                weight,
                weighted_sum,
                mean: model.clamp_mean(weighted_sum / weight),
            };
        }
        stack.push(cur);
    }
    stack
}

fn objective_of(model: RewardModel, values: &[f64], weights: &[f64], blocks: &[Block]) -> f64 {
    blocks
        .iter()
        .map(|b| {
            let m = b.mean;
            (b.start..b.end).map(|k| weights[k] * model.kl_unchecked(values[k], m)).sum::<f64>()
        })
        .sum()
}

/// Weighted monotone fit minimizing `sum_k w_k KL(values_k, c_k)`.
pub fn antitonic_fit(
    model: RewardModel,
    values: &[f64],
    weights: &[f64],
    direction: Direction,
) -> Result<MonotoneFit> {
    check_inputs(model, values, weights)?;
    let blocks = pool(model, values, weights, direction);
    let mut fitted = vec![0.0; values.len()];
    for b in &blocks {
        let m = b.mean;
        fitted[b.start..b.end].iter_mut().for_each(|c| *c = m);
    }
    Ok(MonotoneFit {
        objective: objective_of(model, values, weights, &blocks),
        blocks: blocks.iter().map(|b| b.start..b.end).collect(),
        fitted,
    })
}

/// `inf` over unimodal alternatives peaking inside the discarded slice of
/// `sum_k w_k KL(values_k, lambda(x_k))`.
pub fn i_u_exact(model: RewardModel, values: &[f64], weights: &[f64], side: TrimSide) -> Result<f64> {
    check_inputs(model, values, weights)?;
    Ok(i_u_unchecked(model, values, weights, side))
}

pub(crate) fn i_u_unchecked(model: RewardModel, values: &[f64], weights: &[f64], side: TrimSide) -> f64 {
    let blocks = pool(model, values, weights, side.alternative_direction());
    objective_of(model, values, weights, &blocks)
}

/// Exhaustive minimum of the same objective over monotone sequences whose
/// entries lie on the grid `{0, step, 2 step, ..., 1}` (Bernoulli means).
///
/// Dynamic program over (position, level) with running minima; independent
/// of the pooling code path.
pub fn i_u_bruteforce(
    model: RewardModel,
    values: &[f64],
    weights: &[f64],
    side: TrimSide,
    grid_step: f64,
) -> Result<f64> {
    check_inputs(model, values, weights)?;
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(domain(format!("grid step must lie in (0, 0.1], got {grid_step}")));
    }
    let n = (1.0 / grid_step).round() as usize;
    let levels: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
    let mut cost: Vec<f64> = vec![0.0; levels.len()];
    for (k, (&v, &w)) in values.iter().zip(weights).enumerate() {
        // best[j] = cheapest prefix ending at a level compatible with levels[j]
        let best: Vec<f64> = if k == 0 {
            vec![0.0; levels.len()]
        } else {
            match side.alternative_direction() {
                // previous level >= current level: suffix minima
                Direction::NonIncreasing => {
                    let mut out = cost.clone();
                    for j in (0..levels.len() - 1).rev() {
                        out[j] = out[j].min(out[j + 1]);
                    }
                    out
                }
                Direction::NonDecreasing => {
                    let mut out = cost.clone();
                    for j in 1..levels.len() {
                        out[j] = out[j].min(out[j - 1]);
                    }
                    out
                }
            }
        };
        cost = levels
            .iter()
            .zip(&best)
            .map(|(&c, &b)| b + w * model.kl_unchecked(v, c))
            .collect();
    }
    Ok(cost.into_iter().fold(f64::INFINITY, f64::min))
}
