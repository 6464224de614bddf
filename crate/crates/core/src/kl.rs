//! Reward families, their KL divergences and samplers.
//!
//! Bernoulli divergences use the conventions `0 log 0 = 0` and
//! `0 log(0/0) = 0`; a divergence against a degenerate mean (0 or 1) that
//! differs from the first argument is `f64::INFINITY`, which compares and
//! adds like any other value.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// One-parameter reward distribution, parametrized by its mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RewardModel {
    /// Rewards in {0, 1}; means in [0, 1].
    #[default]
    Bernoulli,
    /// Normal rewards with known standard deviation; any real mean.
    Gaussian { sigma: f64 },
}

impl RewardModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let model = RewardModel::Gaussian { sigma };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RewardModel::Bernoulli => Ok(()),
            RewardModel::Gaussian { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            RewardModel::Gaussian { sigma } => {
                Err(domain(format!("gaussian sigma must be positive, got {sigma}")))
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RewardModel::Bernoulli => "bernoulli",
            RewardModel::Gaussian { .. } => "gaussian",
        }
    }

    pub fn is_valid_mean(&self, mean: f64) -> bool {
        match self {
            RewardModel::Bernoulli => (0.0..=1.0).contains(&mean),
            RewardModel::Gaussian { .. } => mean.is_finite(),
        }
    }

    pub fn check_mean(&self, mean: f64) -> Result<f64> {
        if self.is_valid_mean(mean) {
            Ok(mean)
        } else {
            Err(domain(format!("mean {mean} outside the {} mean domain", self.name())))
        }
    }

    /// Projects a value computed in floating point back onto the mean domain.
    pub(crate) fn clamp_mean(&self, mean: f64) -> f64 {
        match self {
            RewardModel::Bernoulli => mean.clamp(0.0, 1.0),
            RewardModel::Gaussian { .. } => mean,
        }
    }

    /// KL divergence between the distributions with means `a` and `b`.
    pub fn kl(&self, a: f64, b: f64) -> Result<f64> {
        self.check_mean(a)?;
        self.check_mean(b)?;
        Ok(self.kl_unchecked(a, b))
    }

    /// [`RewardModel::kl`] without the domain checks; callers guarantee both
    /// means are valid.
    pub(crate) fn kl_unchecked(&self, a: f64, b: f64) -> f64 {
        match *self {
            RewardModel::Bernoulli => bernoulli_kl(a, b),
            RewardModel::Gaussian { sigma } => (a - b) * (a - b) / (2.0 * sigma * sigma),
        }
    }

    /// Two-point statistic `1{m1 < m2} [KL(m1 + eps, mid - eps) + KL(m2 - eps, mid + eps)]`
    /// with `mid = (m1 + m2) / 2`.
    pub fn kl_star_eps(&self, m1: f64, m2: f64, eps: f64) -> Result<f64> {
        if !(eps >= 0.0) {
            return Err(domain(format!("eps must be nonnegative, got {eps}")));
        }
        self.check_mean(m1)?;
        self.check_mean(m2)?;
        if m1 >= m2 {
            return Ok(0.0);
        }
        let mid = 0.5 * (m1 + m2);
        Ok(self.kl(m1 + eps, mid - eps)? + self.kl(m2 - eps, mid + eps)?)
    }

    pub fn kl_star(&self, m1: f64, m2: f64) -> Result<f64> {
        self.kl_star_eps(m1, m2, 0.0)
    }

    pub(crate) fn kl_star_unchecked(&self, m1: f64, m2: f64) -> f64 {
        if m1 >= m2 {
            return 0.0;
        }
        let mid = 0.5 * (m1 + m2);
        self.kl_unchecked(m1, mid) + self.kl_unchecked(m2, mid)
    }

    /// Draws one reward with the given mean.
    ///
    /// A Bernoulli draw consumes exactly one uniform from `rng`, so two tests
    /// sampling the same arms in the same order see the same rewards.
    pub fn sample<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> Result<f64> {
        self.check_mean(mean)?;
        Ok(self.sample_unchecked(mean, rng))
    }

    pub(crate) fn sample_unchecked<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> f64 {
        match *self {
            RewardModel::Bernoulli => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            RewardModel::Gaussian { sigma } => Normal::new(mean, sigma)
                .expect("sigma validated at construction")
                .sample(rng),
        }
    }
}

/// Bernoulli KL divergence `a log(a/b) + (1-a) log((1-a)/(1-b))`.
pub fn bernoulli_kl(a: f64, b: f64) -> f64 {
    fn term(p: f64, q: f64) -> f64 {
        if p == 0.0 {
            0.0
        } else if q == 0.0 {
            f64::INFINITY
        } else {
            p * (p / q).ln()
        }
    }
    // Rounding can leave a tiny negative value near a == b.
    (term(a, b) + term(1.0 - a, 1.0 - b)).max(0.0)
}
