use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dynamics::{DynamicSystemSource, DynamicsMode};
use crate::engine::run_parallel;
use crate::error::{Error, Result};
use crate::geometry::InequalitySystem;
use crate::harness::config::{ExperimentConfig, ProblemSource};
use crate::harness::problem::{generate_model_problem, random_feasible_system};
use crate::harness::system_file::load_system;
use crate::solver::{solve, IterationRecord, SolveOutcome, Status};

/// One line of the metrics file.
pub type MetricsRow = IterationRecord;

pub const METRICS_HEADER: &str = "iteration,h,step_norm,max_violation,virtual_time,wall_time";

pub fn build_system(config: &ExperimentConfig) -> Result<InequalitySystem> {
    match &config.problem {
        ProblemSource::Model(spec) => generate_model_problem(spec),
        ProblemSource::Random { n, m } => random_feasible_system(*n, *m, config.seed).map(|(s, _)| s),
        ProblemSource::File(path) => load_system(path),
    }
}

pub fn build_source(config: &ExperimentConfig) -> Result<DynamicSystemSource> {
    DynamicSystemSource::new(build_system(config)?, config.dynamics.clone())
}

/// Runs the configured experiment without writing anything.
pub fn run(config: &ExperimentConfig) -> Result<SolveOutcome> {
    config.validate()?;
    let mut source = build_source(config)?;
    let mut solver = config.solver.clone();
    solver.record_trace = true;
    if config.sequential {
        solve(&mut source, &solver)
    } else {
        run_parallel(&mut source, &solver, &config.engine)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub outcome: SolveOutcome,
    pub metrics_path: PathBuf,
}

/// Runs the experiment and writes its metrics file to `config.output_path`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let outcome = run(config)?;
    write_metrics_file(&outcome, config.record_wall_time, &config.output_path)?;
    Ok(ExperimentResult {
        outcome,
        metrics_path: config.output_path.clone(),
    })
}

/// The metrics CSV: one row per iteration, then the run summary as
/// trailing `#` comment lines.
pub fn format_metrics(outcome: &SolveOutcome, record_wall_time: bool) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in outcome.trace.iter().flatten() {
        let wall = if record_wall_time { r.wall_time } else { 0.0 };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k, r.h, r.step_norm, r.max_violation, r.virtual_time, wall
        );
    }
    let _ = writeln!(out, "# status={}", outcome.status);
    let _ = writeln!(out, "# iterations={}", outcome.iterations);
    let _ = writeln!(out, "# virtual_time={}", outcome.virtual_time);
    if record_wall_time {
        let _ = writeln!(out, "# wall_time={}", outcome.wall_time);
    }
    out
}

pub fn write_metrics_file(outcome: &SolveOutcome, record_wall_time: bool, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, format_metrics(outcome, record_wall_time)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSweepEntry {
    pub rate: f64,
    pub status: Status,
    pub iterations: usize,
    pub virtual_time: f64,
}

/// Runs the experiment once per displacement rate. When `out_dir` is given,
/// writes `rate_<r>.csv` per run plus `summary.csv`.
pub fn rate_sweep(config: &ExperimentConfig, rates: &[f64], out_dir: Option<&Path>) -> Result<Vec<RateSweepEntry>> {
    if rates.is_empty() {
        return Err(Error::invalid("rates", "sweep needs at least one rate"));
    }
    let mut entries = Vec::with_capacity(rates.len());
    for &rate in rates {
        let mut cfg = config.clone();
        cfg.dynamics.mode = DynamicsMode::Translation;
        cfg.dynamics.rate = rate;
        let outcome = run(&cfg)?;
        if let Some(dir) = out_dir {
            write_metrics_file(&outcome, cfg.record_wall_time, &dir.join(format!("rate_{rate}.csv")))?;
        }
        entries.push(RateSweepEntry {
            rate,
            status: outcome.status,
            iterations: outcome.iterations,
            virtual_time: outcome.virtual_time,
        });
    }
    if let Some(dir) = out_dir {
        let mut summary = String::from("rate,status,iterations,virtual_time\n");
        for e in &entries {
            let _ = writeln!(summary, "{},{},{},{}", e.rate, e.status, e.iterations, e.virtual_time);
        }
        let path = dir.join("summary.csv");
        fs::write(&path, summary).map_err(|e| Error::io(&path, e))?;
    }
    Ok(entries)
}

/// The largest swept rate at or below which every run converged.
pub fn max_tolerated_rate(entries: &[RateSweepEntry]) -> Option<f64> {
    let mut sorted: Vec<&RateSweepEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.rate.total_cmp(&b.rate));
    sorted
        .iter()
        .take_while(|e| e.status == Status::Converged)
        .last()
        .map(|e| e.rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DynamicsSpec;

    fn entry(rate: f64, status: Status) -> RateSweepEntry {
        RateSweepEntry { rate, status, iterations: 1, virtual_time: 0.0 }
    }

    #[test]
    fn threshold_is_first_failure() {
        let e = [
            entry(1.0, Status::Converged),
            entry(0.1, Status::Converged),
            entry(10.0, Status::BudgetExhausted),
            entry(100.0, Status::Converged),
        ];
        assert_eq!(max_tolerated_rate(&e), Some(1.0));
        assert_eq!(max_tolerated_rate(&[entry(1.0, Status::BudgetExhausted)]), None);
    }

    #[test]
    fn metrics_rows_match_iterations() {
        let cfg = ExperimentConfig {
            sequential: true,
            ..ExperimentConfig::default()
        };
        let out = run(&cfg).unwrap();
        let text = format_metrics(&out, false);
        let rows = text.lines().skip(1).filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, out.iterations);
        assert!(text.starts_with(METRICS_HEADER));
        assert!(text.contains("# status=Converged"));
        assert!(!text.contains("wall_time="));
    }

    #[test]
    fn zero_rate_translation_matches_stationary() {
        let stationary = ExperimentConfig { engine: crate::engine::EngineConfig { workers: 2, ordered_reduce: true }, ..ExperimentConfig::default() };
        let moving = ExperimentConfig { dynamics: DynamicsSpec::translation(0.0, 0.01), ..stationary.clone() };
        let a = run(&stationary).unwrap();
        let b = run(&moving).unwrap();
        assert_eq!(a.solution, b.solution);
        assert_eq!(format_metrics(&a, false), format_metrics(&b, false));
    }
}
