//! Declarative experiment descriptions, read from TOML.
//!
//! ```toml
//! experiment = "regret"
//! horizons = [10000, 100000]
//! replicates = 10
//! base_seed = 7
//! outputs = "results"
//!
//! [[envs]]
//! id = "tri"
//! shape = { type = "power_peak", xi = 1.0, xstar = 0.5 }
//!
//! [[policies]]
//! kind = "sp_prime"
//!
//! [[policies]]
//! kind = "kl_ucb"        # delta defaults to (ln T / sqrt T)^(1 / xi)
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{Shape, UnimodalEnv};
use crate::error::{invalid, Result};
use crate::kl::RewardModel;
use crate::policy::{PolicyConfig, PolicyKind, DEFAULT_LOGLOG_COEFF};
use crate::trim::TestVariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Regret and final error of policies over horizons.
    Regret,
    /// Wrong-trim frequencies of single tests.
    Risk,
    /// Test lengths against their expected-length and tail bounds.
    TrimLength,
    /// No-decision rates of the two-point probe next to the three-arm test.
    StallDemo,
    /// Regret runs of the phased policies checked against their bounds.
    BoundCheck,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Regret => "regret",
            ExperimentKind::Risk => "risk",
            ExperimentKind::TrimLength => "trim_length",
            ExperimentKind::StallDemo => "stall_demo",
            ExperimentKind::BoundCheck => "bound_check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub id: String,
    pub shape: Shape,
    #[serde(default)]
    pub model: RewardModel,
}

impl EnvSpec {
    pub fn power_peak(id: &str, xi: f64, xstar: f64) -> Self {
        Self { id: id.to_string(), shape: Shape::PowerPeak { xi, xstar }, model: RewardModel::Bernoulli }
    }

    pub fn build(&self) -> Result<UnimodalEnv> {
        UnimodalEnv::new(self.shape.clone(), self.model)
    }
}

fn default_a0() -> f64 {
    1.0
}

fn default_c0() -> f64 {
    0.25
}

fn default_loglog() -> f64 {
    DEFAULT_LOGLOG_COEFF
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    Sp,
    SpPrime,
    KlUcb {
        /// Grid step; derived from the horizon and the env's exponent when absent.
        #[serde(default)]
        delta: Option<f64>,
        #[serde(default = "default_loglog")]
        loglog_coeff: f64,
    },
    Kw {
        #[serde(default = "default_a0")]
        a0: f64,
        #[serde(default = "default_c0")]
        c0: f64,
    },
}

impl PolicySpec {
    pub fn kl_ucb() -> Self {
        PolicySpec::KlUcb { delta: None, loglog_coeff: DEFAULT_LOGLOG_COEFF }
    }

    pub fn kw() -> Self {
        PolicySpec::Kw { a0: default_a0(), c0: default_c0() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Sp => "sp",
            PolicySpec::SpPrime => "sp_prime",
            PolicySpec::KlUcb { .. } => "kl_ucb",
            PolicySpec::Kw { .. } => "kw",
        }
    }

    pub fn resolve(&self, env: &UnimodalEnv, horizon: u64, gamma: f64) -> Result<PolicyConfig> {
        let kind = match *self {
            PolicySpec::Sp => PolicyKind::Sp,
            PolicySpec::SpPrime => PolicyKind::SpPrime,
            PolicySpec::KlUcb { delta, loglog_coeff } => {
                let delta = match delta {
                    Some(d) => d,
                    None => {
                        let xi = env.xi().ok_or_else(|| {
                            invalid("kl_ucb needs an explicit delta on envs without an exponent")
                        })?;
                        default_delta(horizon, xi)
                    }
                };
                PolicyKind::KlUcb { delta, loglog_coeff }
            }
            PolicySpec::Kw { a0, c0 } => PolicyKind::Kw { a0, c0 },
        };
        PolicyConfig::new(kind, horizon, gamma)
    }
}

/// `(ln T / sqrt T)^{1 / xi}`.
pub fn default_delta(horizon: u64, xi: f64) -> f64 {
    let t = horizon.max(3) as f64;
    (t.ln() / t.sqrt()).powf(1.0 / xi)
}

fn default_gamma() -> f64 {
    0.6
}

fn default_zetas() -> Vec<f64> {
    vec![0.05]
}

fn default_tests() -> Vec<TestVariant> {
    vec![TestVariant::ItK, TestVariant::It3Prime]
}

fn default_outputs() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub envs: Vec<EnvSpec>,
    #[serde(default)]
    pub policies: Vec<PolicySpec>,
    pub horizons: Vec<u64>,
    pub replicates: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    /// Risk exponent of the phased policies.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Risk budgets for single-test experiments.
    #[serde(default = "default_zetas")]
    pub zetas: Vec<f64>,
    /// Test variants compared by the risk and length experiments.
    #[serde(default = "default_tests")]
    pub tests: Vec<TestVariant>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(invalid("replicates must be at least 1"));
        }
        if self.horizons.is_empty() {
            return Err(invalid("horizons must not be empty"));
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(format!("horizons must be strictly increasing, got {:?}", self.horizons)));
        }
        if self.horizons[0] < 1 {
            return Err(invalid("horizons must be positive"));
        }
        if self.envs.is_empty() {
            return Err(invalid("at least one env is required"));
        }
        let mut ids = HashSet::new();
        for spec in &self.envs {
            if !ids.insert(spec.id.as_str()) {
                return Err(invalid(format!("duplicate env id {:?}", spec.id)));
            }
            spec.build()?;
        }
        if let Some(z) = self.zetas.iter().find(|z| !(**z > 0.0 && **z < 1.0)) {
            return Err(invalid(format!("zetas must lie in (0, 1), got {z}")));
        }
        match self.experiment {
            ExperimentKind::Regret | ExperimentKind::BoundCheck => {
                if self.policies.is_empty() {
                    return Err(invalid("at least one policy is required"));
                }
                let mut names = HashSet::new();
                for p in &self.policies {
                    if !names.insert(p.name()) {
                        return Err(invalid(format!("policy {:?} listed twice", p.name())));
                    }
                }
                for spec in &self.envs {
                    let env = spec.build()?;
                    for p in &self.policies {
                        p.resolve(&env, self.horizons[0], self.gamma)?;
                    }
                    if self.experiment == ExperimentKind::BoundCheck {
                        env.class_params()?;
                    }
                }
            }
            ExperimentKind::Risk | ExperimentKind::TrimLength | ExperimentKind::StallDemo => {
                if self.zetas.is_empty() {
                    return Err(invalid("zetas must not be empty"));
                }
                if self.experiment != ExperimentKind::StallDemo && self.tests.is_empty() {
                    return Err(invalid("tests must not be empty"));
                }
                if self.tests.contains(&TestVariant::TwoPointProbe) && self.experiment != ExperimentKind::StallDemo {
                    return Err(invalid("the two-point probe only runs in stall_demo"));
                }
            }
        }
        Ok(())
    }

    /// Defaults used by the command line when no config file is given.
    pub fn builtin(kind: ExperimentKind) -> Self {
        let base = Self {
            experiment: kind,
            envs: Vec::new(),
            policies: Vec::new(),
            horizons: Vec::new(),
            replicates: 1,
            base_seed: 0,
            outputs: default_outputs(),
            gamma: default_gamma(),
            zetas: default_zetas(),
            tests: default_tests(),
        };
        let power_peaks =
            || vec![EnvSpec::power_peak("xi0.5", 0.5, 0.5), EnvSpec::power_peak("xi1", 1.0, 0.5), EnvSpec::power_peak("xi2", 2.0, 0.5)];
        match kind {
            ExperimentKind::Regret => Self {
                envs: power_peaks(),
                policies: vec![PolicySpec::SpPrime, PolicySpec::kl_ucb(), PolicySpec::kw()],
                horizons: vec![1_000, 10_000, 100_000],
                replicates: 10,
                ..base
            },
            ExperimentKind::Risk => Self {
                envs: vec![EnvSpec::power_peak("peak0.05", 1.0, 0.05)],
                horizons: vec![20_000],
                zetas: vec![0.05, 0.1],
                replicates: 2_000,
                ..base
            },
            ExperimentKind::TrimLength => Self {
                envs: vec![EnvSpec::power_peak("peak0.6", 1.0, 0.6)],
                horizons: vec![1_000, 10_000, 100_000],
                replicates: 500,
                ..base
            },
            ExperimentKind::StallDemo => Self {
                envs: vec![EnvSpec::power_peak("tri", 1.0, 0.5)],
                horizons: vec![10_000],
                replicates: 500,
                tests: Vec::new(),
                ..base
            },
            ExperimentKind::BoundCheck => Self {
                envs: power_peaks(),
                policies: vec![PolicySpec::Sp, PolicySpec::SpPrime],
                horizons: vec![100_000],
                replicates: 20,
                ..base
            },
        }
    }
}
