//! Problem generation, configuration, system files and experiment runs.

pub mod config;
pub mod experiment;
pub mod problem;
pub mod system_file;

pub use config::{ConfigMap, ExperimentConfig, ProblemSource};
pub use experiment::{
    max_tolerated_rate, rate_sweep, run, run_experiment, ExperimentResult, MetricsRow, RateSweepEntry,
};
pub use problem::{generate_model_problem, random_feasible_system, ModelProblemSpec};
pub use system_file::{load_system, save_system};
