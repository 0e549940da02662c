//! Sequential reference engine: the plain pseudo-projection iteration (AP),
//! its fixed-step modification (ModAP), and the Map/Reduce list formulation
//! both engines share.

pub mod tree;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::dynamics::DynamicSystemSource;
use crate::error::{Error, Result};
use crate::geometry::{self, check_positive, slice_kernel, InequalitySystem, SliceResult};
use tree::{node_sum, root, Partial};

/// Which step mapping the iteration applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// `x - phi(x)`: Fejér step toward the averaged projections.
    Ap,
    /// `x - psi(x)`: the same direction rescaled to length `lambda`.
    #[default]
    ModAp,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Ap => "ap",
            Variant::ModAp => "modap",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ap" => Ok(Variant::Ap),
            "modap" => Ok(Variant::ModAp),
            other => Err(Error::invalid("variant", format!("expected `ap` or `modap`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub eps: f64,
    /// Step length for ModAP; ignored by AP.
    pub lambda: f64,
    pub variant: Variant,
    pub max_iterations: usize,
    pub record_trace: bool,
    /// Keep every iterate, starting with the initial point.
    pub record_iterates: bool,
    /// Starting point; the zero vector when unset.
    pub initial_point: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps: 1e-7,
            lambda: 1.0,
            variant: Variant::ModAp,
            max_iterations: 50_000,
            record_trace: false,
            record_iterates: false,
            initial_point: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("eps", self.eps)?;
        check_positive("lambda", self.lambda)?;
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    BudgetExhausted,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "Converged",
            Status::BudgetExhausted => "BudgetExhausted",
        })
    }
}

/// Per-iteration diagnostics, measured after the data update.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub h: usize,
    pub step_norm: f64,
    pub max_violation: f64,
    pub virtual_time: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: Status,
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub trace: Option<Vec<IterationRecord>>,
    pub iterates: Option<Vec<Vec<f64>>>,
    /// Source clock at return.
    pub virtual_time: f64,
    pub wall_time: f64,
}

/// The positive slices of `x` for every row, in row order.
pub fn map_stage(sys: &InequalitySystem, x: &[f64]) -> Result<Vec<SliceResult>> {
    sys.check_dim(x.len())?;
    Ok(sys
        .rows()
        .zip(sys.rhs())
        .map(|(row, &b)| {
            let mut direction = vec![0.0; x.len()];
            let violated = slice_kernel(row, b, x, &mut direction);
            SliceResult { direction, violated }
        })
        .collect())
}

/// Sums a slice list over the fixed pairwise tree; returns `(y, h)`.
pub fn reduce_stage(slices: &[SliceResult]) -> Result<(Vec<f64>, usize)> {
    let first = slices.first().ok_or(Error::EmptyList)?;
    let n = first.direction.len();
    if let Some(bad) = slices.iter().find(|s| s.direction.len() != n) {
        return Err(Error::Dimension {
            expected: n,
            got: bad.direction.len(),
        });
    }
    let m = slices.len();
    let total = node_sum(root(m), m, n, &mut |i, out: &mut [f64]| {
        out.copy_from_slice(&slices[i].direction);
        slices[i].violated
    });
    let h = total.h;
    Ok((total.into_vec(n), h))
}

/// Map and Reduce fused: slices are produced at the leaves of the tree and
/// never materialized as a list.
pub(crate) fn map_reduce(sys: &InequalitySystem, x: &[f64]) -> Partial {
    let m = sys.len();
    node_sum(root(m), m, sys.dim(), &mut |i, out: &mut [f64]| {
        slice_kernel(sys.row(i), sys.rhs()[i], x, out)
    })
}

/// Moves `x` by the step of `variant` given the reduced `(y, h)` and returns
/// the length of the move.
pub(crate) fn apply_step(variant: Variant, lambda: f64, x: &mut [f64], y: &[f64], h: usize) -> f64 {
    if h == 0 {
        return 0.0;
    }
    match variant {
        Variant::Ap => {
            let count = h as f64;
            let mut sq = 0.0;
            for (xi, &yi) in x.iter_mut().zip(y) {
                let d = yi / count;
                *xi -= d;
                sq += d * d;
            }
            sq.sqrt()
        }
        Variant::ModAp => {
            let len = geometry::norm(y);
            if len == 0.0 {
                return 0.0;
            }
            let mut sq = 0.0;
            for (xi, &yi) in x.iter_mut().zip(y) {
                let d = lambda * yi / len;
                *xi -= d;
                sq += d * d;
            }
            sq.sqrt()
        }
    }
}

/// One AP step: `x - phi(x)`.
pub fn ap_step(sys: &InequalitySystem, x: &[f64]) -> Result<(Vec<f64>, usize)> {
    step(sys, x, Variant::Ap, 1.0)
}

/// One ModAP step: `x - psi(x)`, of length `lambda` whenever `h > 0`.
pub fn modap_step(sys: &InequalitySystem, x: &[f64], lambda: f64) -> Result<(Vec<f64>, usize)> {
    check_positive("lambda", lambda)?;
    step(sys, x, Variant::ModAp, lambda)
}

fn step(sys: &InequalitySystem, x: &[f64], variant: Variant, lambda: f64) -> Result<(Vec<f64>, usize)> {
    sys.check_dim(x.len())?;
    let reduced = map_reduce(sys, x);
    let mut next = x.to_vec();
    if let Some(y) = &reduced.y {
        apply_step(variant, lambda, &mut next, y, reduced.h);
    }
    Ok((next, reduced.h))
}

/// How an engine evaluates the Map/Reduce stages and propagates updates.
pub(crate) trait StageRunner {
    fn map_reduce(&mut self, sys: &InequalitySystem, x: &[f64]) -> Result<Partial>;

    /// Called once per iteration after the master has updated its data and
    /// decided whether to stop.
    fn end_iteration(&mut self, _elapsed: f64, _exit: bool) -> Result<()> {
        Ok(())
    }
}

struct Sequential;

impl StageRunner for Sequential {
    fn map_reduce(&mut self, sys: &InequalitySystem, x: &[f64]) -> Result<Partial> {
        Ok(map_reduce(sys, x))
    }
}

/// Runs the iteration against a (possibly moving) system until the iterate
/// is an `eps`-member of the current system or the budget runs out.
pub fn solve(source: &mut DynamicSystemSource, config: &SolverConfig) -> Result<SolveOutcome> {
    drive(source, config, &mut Sequential)
}

pub(crate) fn drive<R: StageRunner>(
    source: &mut DynamicSystemSource,
    config: &SolverConfig,
    runner: &mut R,
) -> Result<SolveOutcome> {
    config.validate()?;
    let n = source.system().dim();
    let mut x = match &config.initial_point {
        Some(p) => {
            source.system().check_dim(p.len())?;
            p.clone()
        }
        None => vec![0.0; n],
    };
    let started = Instant::now();
    source.start_clock();
    let mut trace = config.record_trace.then(Vec::new);
    let mut iterates = config.record_iterates.then(|| vec![x.clone()]);

    let finish = |status, x: Vec<f64>, iterations, trace, iterates, source: &DynamicSystemSource| SolveOutcome {
        status,
        solution: x,
        iterations,
        trace,
        iterates,
        virtual_time: source.current_time(),
        wall_time: started.elapsed().as_secs_f64(),
    };

    if geometry::eps_membership(source.system(), &x, config.eps)? {
        return Ok(finish(Status::Converged, x, 0, trace, iterates, source));
    }

    for k in 1..=config.max_iterations {
        let reduced = runner.map_reduce(source.system(), &x)?;
        let step_norm = match &reduced.y {
            Some(y) => apply_step(config.variant, config.lambda, &mut x, y, reduced.h),
            None => 0.0,
        };
        let elapsed = source.tick()?;
        let converged = geometry::eps_membership(source.system(), &x, config.eps)?;
        let exit = converged || k == config.max_iterations;
        runner.end_iteration(elapsed, exit)?;

        if let Some(t) = trace.as_mut() {
            t.push(IterationRecord {
                k,
                h: reduced.h,
                step_norm,
                max_violation: geometry::max_relative_violation(source.system(), &x)?,
                virtual_time: source.current_time(),
                wall_time: started.elapsed().as_secs_f64(),
            });
        }
        if let Some(it) = iterates.as_mut() {
            it.push(x.clone());
        }
        if converged {
            return Ok(finish(Status::Converged, x, k, trace, iterates, source));
        }
    }
    let iterations = config.max_iterations;
    Ok(finish(Status::BudgetExhausted, x, iterations, trace, iterates, source))
}
