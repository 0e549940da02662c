//! Pseudo-projection solvers for systems of linear inequalities `A x <= b`
//! whose right-hand side may move while the solver runs.
//!
//! * [`geometry`]: the system type and pointwise operators (residuals,
//!   projections, positive slices, the averaged direction and its
//!   fixed-length rescaling, precision-`eps` membership).
//! * [`solver`]: the sequential engine for the plain (`ap`) and fixed-step
//!   (`modap`) iterations, written as Map/Reduce over the constraint list.
//! * [`engine`]: the same iteration on a master and `K` worker threads in
//!   bulk-synchronous supersteps.
//! * [`dynamics`]: translation of the polytope over virtual or wall-clock
//!   time.
//! * [`cost`]: per-iteration cost counts and the scalability bound `K_max`.
//! * [`harness`]: the model problem family, config files, system files and
//!   experiment runs used by the `modap` binary.
//!
//! ```
//! use modap::{generate_model_problem, solve, DynamicSystemSource, ModelProblemSpec, SolverConfig, Status};
//!
//! let sys = generate_model_problem(&ModelProblemSpec::new(10)).unwrap();
//! let mut source = DynamicSystemSource::stationary(sys);
//! let out = solve(&mut source, &SolverConfig::default()).unwrap();
//! assert_eq!(out.status, Status::Converged);
//! ```

pub mod cost;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod solver;

pub use dynamics::{translate, Clock, DynamicSystemSource, DynamicsMode, DynamicsSpec};
pub use engine::{partition_list, run_parallel, EngineConfig, Partition, WorkerPool};
pub use error::{Error, Result};
pub use geometry::{InequalitySystem, SliceResult};
pub use harness::{generate_model_problem, ModelProblemSpec};
pub use solver::{solve, SolveOutcome, SolverConfig, Status, Variant};
