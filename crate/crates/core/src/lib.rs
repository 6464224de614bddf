//! Unimodal continuum-armed bandits on `[0, 1]`.
//!
//! The core policy repeatedly runs a sequential test on three equally spaced
//! interior arms of the current interval and discards an outer quarter once
//! the test is confident the peak is not there. Baselines (KL-UCB on a grid,
//! Kiefer-Wolfowitz) and a Monte Carlo harness are included.

pub mod env;
pub mod error;
pub mod harness;
pub mod interval;
pub mod isotonic;
pub mod kl;
pub mod policy;
pub mod rng;
pub mod trim;

pub use env::{ClassParams, Shape, UnimodalEnv};
pub use error::{Error, Result};
pub use interval::ExactInterval;
pub use isotonic::{antitonic_fit, i_u_bruteforce, i_u_exact, Direction, MonotoneFit, TrimSide};
pub use kl::RewardModel;
pub use policy::{run_policy, PolicyConfig, PolicyKind, PolicyTrace};
pub use rng::SimRng;
pub use trim::{
    f_function, run_trim_test, run_trim_test_with, run_two_point_probe, solve_threshold, Decision,
    RewardSource, TestVariant, TrimOutcome, TrimTestConfig,
};
