//! Experiment configuration: flat `key = value` lines with dotted keys.
//!
//! ```text
//! # model problem, n = 10
//! problem.n = 10
//! solver.variant = modap
//! solver.lambda = 1
//! dynamics.mode = translation
//! dynamics.rate = 0.5
//! engine.workers = 4
//! ```
//!
//! Recognised keys:
//!
//! | key | default |
//! |-----|---------|
//! | `problem.family` (`model`, `random`, `file`) | `model` |
//! | `problem.n` | `10` |
//! | `problem.m` (random family) | `2n + 2` |
//! | `problem.box_upper` | `200` |
//! | `problem.sum_upper` | `100n + 100` |
//! | `problem.sum_lower` | `100` |
//! | `problem.file` (file family; relative to the config file) | |
//! | `solver.eps` | `1e-7` |
//! | `solver.lambda` | `1` |
//! | `solver.variant` (`ap`, `modap`) | `modap` |
//! | `solver.max_iterations` | `50000` |
//! | `engine.workers` | `1` |
//! | `engine.ordered_reduce` | `true` |
//! | `engine.sequential` | `false` |
//! | `dynamics.mode` (`stationary`, `translation`) | `stationary` |
//! | `dynamics.rate` | `0` |
//! | `dynamics.clock` (`virtual`, `wall`) | `virtual` |
//! | `dynamics.seconds_per_iteration` | `0.01` |
//! | `seed` | `0` |
//! | `output.path` | `metrics.csv` |
//! | `output.wall_time` | `false` |

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dynamics::{Clock, DynamicsMode, DynamicsSpec};
use crate::engine::EngineConfig;
use crate::error::{Error, Result};
use crate::harness::problem::ModelProblemSpec;
use crate::solver::{SolverConfig, Variant};

const KEYS: &[&str] = &[
    "problem.family",
    "problem.n",
    "problem.m",
    "problem.box_upper",
    "problem.sum_upper",
    "problem.sum_lower",
    "problem.file",
    "solver.eps",
    "solver.lambda",
    "solver.variant",
    "solver.max_iterations",
    "engine.workers",
    "engine.ordered_reduce",
    "engine.sequential",
    "dynamics.mode",
    "dynamics.rate",
    "dynamics.clock",
    "dynamics.seconds_per_iteration",
    "seed",
    "output.path",
    "output.wall_time",
];

/// Raw key/value pairs, later overrides winning.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
    base_dir: Option<PathBuf>,
}

impl ConfigMap {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut map = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    reason: format!("expected `key = value`, got `{line}`"),
                });
            };
            map.set(key.trim(), value.trim())?;
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map = Self::parse(&text, path)?;
        map.base_dir = path.parent().map(Path::to_path_buf);
        Ok(map)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config {
                key: key.to_string(),
                reason: "unknown key".into(),
            });
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair.split_once('=').ok_or_else(|| Error::Config {
            key: pair.to_string(),
            reason: "override must look like `key=value`".into(),
        })?;
        self.set(key.trim(), value.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| Error::Config {
                    key: key.to_string(),
                    reason: format!("cannot parse `{v}`: {e}"),
                })
            })
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }
}

/// Where the inequality system comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Model(ModelProblemSpec),
    /// [`crate::harness::problem::random_feasible_system`] with the config seed.
    Random { n: usize, m: usize },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    pub solver: SolverConfig,
    pub engine: EngineConfig,
    /// Run the sequential engine instead of the worker pool.
    pub sequential: bool,
    pub dynamics: DynamicsSpec,
    pub seed: u64,
    pub output_path: PathBuf,
    /// Write measured wall-clock times into the metrics file. Off by
    /// default so that repeated runs produce identical files.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_map(&ConfigMap::default()).expect("defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let n: usize = map.or("problem.n", 10)?;
        let problem = match map.get("problem.family").unwrap_or("model") {
            "model" => ProblemSource::Model(ModelProblemSpec {
                n,
                box_upper: map.or("problem.box_upper", 200.0)?,
                sum_upper: map.or("problem.sum_upper", 100.0 * n as f64 + 100.0)?,
                sum_lower: map.or("problem.sum_lower", 100.0)?,
            }),
            "random" => ProblemSource::Random {
                n,
                m: map.or("problem.m", 2 * n + 2)?,
            },
            "file" => {
                let file = map.get("problem.file").ok_or_else(|| Error::Config {
                    key: "problem.file".into(),
                    reason: "required when problem.family = file".into(),
                })?;
                let path = PathBuf::from(file);
                ProblemSource::File(match &map.base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path,
                })
            }
            other => {
                return Err(Error::Config {
                    key: "problem.family".into(),
                    reason: format!("expected `model`, `random` or `file`, got `{other}`"),
                })
            }
        };

        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            eps: map.or("solver.eps", defaults.eps)?,
            lambda: map.or("solver.lambda", defaults.lambda)?,
            variant: map.or("solver.variant", Variant::default())?,
            max_iterations: map.or("solver.max_iterations", defaults.max_iterations)?,
            record_trace: true,
            ..defaults
        };

        let engine = EngineConfig {
            workers: map.or("engine.workers", 1)?,
            ordered_reduce: map.or("engine.ordered_reduce", true)?,
        };

        let clock = match map.get("dynamics.clock").unwrap_or("virtual") {
            "virtual" => Clock::VirtualPerIteration {
                seconds_per_iteration: map.or("dynamics.seconds_per_iteration", 0.01)?,
            },
            "wall" => Clock::WallClock,
            other => {
                return Err(Error::Config {
                    key: "dynamics.clock".into(),
                    reason: format!("expected `virtual` or `wall`, got `{other}`"),
                })
            }
        };
        let dynamics = DynamicsSpec {
            mode: map.or("dynamics.mode", DynamicsMode::Stationary)?,
            rate: map.or("dynamics.rate", 0.0)?,
            clock,
            direction: None,
        };

        let config = Self {
            problem,
            solver,
            engine,
            sequential: map.or("engine.sequential", false)?,
            dynamics,
            seed: map.or("seed", 0)?,
            output_path: map.or("output.path", PathBuf::from("metrics.csv"))?,
            record_wall_time: map.or("output.wall_time", false)?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_map(&ConfigMap::load(path)?)
    }

    /// Checks every sub-configuration, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        let key_err = |key: &str, e: Error| Error::Config {
            key: key.to_string(),
            reason: e.to_string(),
        };
        match &self.problem {
            ProblemSource::Model(spec) => spec.validate().map_err(|e| key_err("problem", e))?,
            ProblemSource::Random { n, m } => {
                if *n == 0 || *m == 0 {
                    return Err(key_err("problem.n", Error::invalid("n", "n and m must be positive")));
                }
            }
            ProblemSource::File(_) => {}
        }
        self.solver.validate().map_err(|e| key_err("solver", e))?;
        if self.engine.workers == 0 {
            return Err(key_err("engine.workers", Error::invalid("workers", "must be at least 1")));
        }
        self.dynamics.validate().map_err(|e| key_err("dynamics", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_map(&ConfigMap::parse(text, Path::new("t.conf"))?)
    }

    #[test]
    fn defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.problem, ProblemSource::Model(ModelProblemSpec::new(10)));
        assert_eq!(c.solver.eps, 1e-7);
        assert_eq!(c.solver.lambda, 1.0);
        assert_eq!(c.solver.variant, Variant::ModAp);
        assert_eq!(c.dynamics, DynamicsSpec::stationary());
        assert!(c.engine.ordered_reduce);
    }

    #[test]
    fn full_file() {
        let c = parse(
            "# experiment\nproblem.n = 4\nsolver.variant = ap\nsolver.eps = 1e-6\n\
             engine.workers = 3\ndynamics.mode = translation\ndynamics.rate = 2.5\n\
             dynamics.seconds_per_iteration = 0.1\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(c.problem, ProblemSource::Model(ModelProblemSpec::new(4)));
        assert_eq!(c.solver.variant, Variant::Ap);
        assert_eq!(c.engine.workers, 3);
        assert_eq!(c.dynamics, DynamicsSpec::translation(2.5, 0.1));
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn overrides_win() {
        let mut map = ConfigMap::parse("solver.lambda = 1\n", Path::new("t")).unwrap();
        map.set_pair("solver.lambda=0.25").unwrap();
        assert_eq!(ExperimentConfig::from_map(&map).unwrap().solver.lambda, 0.25);
        assert!(map.set_pair("solver.lambda").is_err());
    }

    #[test]
    fn errors_name_the_key() {
        let e = parse("solver.eps = tiny\n").unwrap_err().to_string();
        assert!(e.contains("solver.eps"), "{e}");
        let e = parse("solver.epsilon = 1\n").unwrap_err().to_string();
        assert!(e.contains("solver.epsilon") && e.contains("unknown"), "{e}");
        let e = parse("engine.workers = 0\n").unwrap_err().to_string();
        assert!(e.contains("engine.workers"), "{e}");
        let e = parse("dynamics.rate = -3\n").unwrap_err().to_string();
        assert!(e.contains("dynamics"), "{e}");
        assert!(parse("just words\n").is_err());
        assert!(parse("problem.family = file\n").is_err());
    }

    #[test]
    fn file_family_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let conf = dir.path().join("exp.conf");
        fs::write(&conf, "problem.family = file\nproblem.file = sys.txt\n").unwrap();
        let c = ExperimentConfig::load(&conf).unwrap();
        assert_eq!(c.problem, ProblemSource::File(dir.path().join("sys.txt")));
    }
}
