//! Monte Carlo experiments, guarantee evaluators and result tables.

pub mod bounds;
pub mod config;
pub mod experiment;
pub mod table;

pub use bounds::{error_bound, regret_bound, regret_bound_generic, PSI};
pub use config::{default_delta, EnvSpec, ExperimentConfig, ExperimentKind, PolicySpec};
pub use experiment::{emit, is_wrong_trim, length_gap, run_experiment};
pub use table::{format_g12, CSV_HEADER, SCHEMA_VERSION, Replicate, ResultTable, Row};
