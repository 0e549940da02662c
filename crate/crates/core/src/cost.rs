//! Analytic per-iteration cost of the parallel algorithm and the worker count
//! beyond which it stops speeding up.
//!
//! Counts are per iteration, for `n` unknowns and `m` inequalities:
//!
//! | symbol | meaning                                        | value                   |
//! |--------|------------------------------------------------|-------------------------|
//! | `c_s`  | floats sent master -> one worker               | `n`                     |
//! | `c_map`| operations for Map over the whole list         | `(5n + 1) m`            |
//! | `c_a`  | operations to add two vectors                  | `n`                     |
//! | `c_r`  | floats sent one worker -> master               | `n`                     |
//! | `c_p`  | master operations for the step and stop check  | `(6n + 11) m + 5n + 8`  |
//! | `c_u`  | floats of updated source data per worker       | `1` or `(n + 1) m`      |
//!
//! and the bound is
//! `K_max = sqrt((t_map + l t_a) / (2L + t_s + t_r + t_a))` with `l = m`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How much of the source data changes per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateBreadth {
    /// One value changes: `c_u = 1`.
    #[default]
    Single,
    /// Every coefficient and right-hand side changes: `c_u = (n + 1) m`.
    Full,
}

impl FromStr for UpdateBreadth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "single" => Ok(Self::Single),
            "full" => Ok(Self::Full),
            other => Err(Error::invalid("breadth", format!("expected `single` or `full`, got `{other}`"))),
        }
    }
}

impl fmt::Display for UpdateBreadth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Single => "single",
            Self::Full => "full",
        })
    }
}

/// Assumed seconds per arithmetic operation.
pub const DEFAULT_TAU_OP: f64 = 2.5e-10;
/// Assumed seconds per transferred float.
pub const DEFAULT_TAU_TR: f64 = 2e-9;
/// Assumed per-message latency in seconds.
pub const DEFAULT_LATENCY: f64 = 1.5e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub n: u64,
    pub m: u64,
    pub tau_op: f64,
    pub tau_tr: f64,
    pub latency: f64,
    pub breadth: UpdateBreadth,
}

impl CostParams {
    /// Parameters with the default (assumed) machine constants.
    pub fn new(n: u64, m: u64, breadth: UpdateBreadth) -> Self {
        Self {
            n,
            m,
            tau_op: DEFAULT_TAU_OP,
            tau_tr: DEFAULT_TAU_TR,
            latency: DEFAULT_LATENCY,
            breadth,
        }
    }

    /// Same timing constants with every time scaled to 1 (`tau_op`, `tau_tr`, `L`).
    pub fn unit(n: u64, m: u64, breadth: UpdateBreadth) -> Self {
        Self {
            n,
            m,
            tau_op: 1.0,
            tau_tr: 1.0,
            latency: 1.0,
            breadth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_size(self.n, self.m)?;
        for (name, v) in [("tau_op", self.tau_op), ("tau_tr", self.tau_tr), ("latency", self.latency)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

fn check_size(n: u64, m: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if m == 0 {
        return Err(Error::invalid("m", "must be at least 1"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperationCounts {
    pub c_s: u64,
    pub c_map: u64,
    pub c_a: u64,
    pub c_r: u64,
    pub c_p: u64,
    pub c_u: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostTimes {
    pub t_s: f64,
    pub t_map: f64,
    pub t_r: f64,
    pub t_a: f64,
    pub t_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostReport {
    pub params: CostParams,
    pub counts: OperationCounts,
    pub times: CostTimes,
    /// Length of the constraint list, equal to `m`.
    pub list_len: u64,
    pub k_max: f64,
}

pub fn operation_counts(n: u64, m: u64, breadth: UpdateBreadth) -> Result<OperationCounts> {
    check_size(n, m)?;
    Ok(OperationCounts {
        c_s: n,
        c_map: (5 * n + 1) * m,
        c_a: n,
        c_r: n,
        c_p: (6 * n + 11) * m + 5 * n + 8,
        c_u: match breadth {
            UpdateBreadth::Single => 1,
            UpdateBreadth::Full => (n + 1) * m,
        },
    })
}

pub fn time_params(params: &CostParams) -> Result<CostTimes> {
    params.validate()?;
    let c = operation_counts(params.n, params.m, params.breadth)?;
    Ok(CostTimes {
        t_s: (c.c_s + c.c_u) as f64 * params.tau_tr,
        t_map: c.c_map as f64 * params.tau_op,
        t_r: c.c_r as f64 * params.tau_tr,
        t_a: c.c_a as f64 * params.tau_op,
        t_p: c.c_p as f64 * params.tau_op,
    })
}

/// The scalability bound as a real number; flooring is up to the caller.
pub fn k_max(params: &CostParams) -> Result<f64> {
    let t = time_params(params)?;
    let l = params.m as f64;
    let denom = 2.0 * params.latency + t.t_s + t.t_r + t.t_a;
    if denom <= 0.0 {
        return Err(Error::invalid("latency", "communication cost is zero; bound is unbounded"));
    }
    Ok(((t.t_map + l * t.t_a) / denom).sqrt())
}

pub fn report(params: &CostParams) -> Result<CostReport> {
    Ok(CostReport {
        params: *params,
        counts: operation_counts(params.n, params.m, params.breadth)?,
        times: time_params(params)?,
        list_len: params.m,
        k_max: k_max(params)?,
    })
}

/// How a sweep derives `m` from `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RowRule {
    /// `m = 2n + 2`, the size of the model problem.
    #[default]
    ModelProblem,
    /// `m = k n`.
    Multiple(u64),
    Fixed(u64),
}

impl RowRule {
    pub fn rows(self, n: u64) -> u64 {
        match self {
            RowRule::ModelProblem => 2 * n + 2,
            RowRule::Multiple(k) => k * n,
            RowRule::Fixed(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n: u64,
    pub m: u64,
    pub k_max_single: f64,
    pub k_max_full: f64,
}

/// `k_max` under both update regimes for each `n`, using the timing
/// constants of `base`.
pub fn sweep(base: &CostParams, n_values: &[u64], rows: RowRule) -> Result<Vec<SweepRow>> {
    if n_values.is_empty() {
        return Err(Error::invalid("n_values", "sweep needs at least one dimension"));
    }
    n_values
        .iter()
        .map(|&n| {
            let m = rows.rows(n);
            let at = |breadth| k_max(&CostParams { n, m, breadth, ..*base });
            Ok(SweepRow {
                n,
                m,
                k_max_single: at(UpdateBreadth::Single)?,
                k_max_full: at(UpdateBreadth::Full)?,
            })
        })
        .collect()
}
