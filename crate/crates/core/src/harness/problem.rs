//! Test problem families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::InequalitySystem;

/// The scalable model problem: a box `0 <= x_i <= box_upper` cut by
/// `sum_lower <= sum(x) <= sum_upper`, giving `m = 2n + 2` rows.
///
/// Row order: the `n` upper bounds, the `n` lower bounds, the upper sum
/// bound, the lower sum bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelProblemSpec {
    pub n: usize,
    pub box_upper: f64,
    pub sum_upper: f64,
    pub sum_lower: f64,
}

impl ModelProblemSpec {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            box_upper: 200.0,
            sum_upper: 100.0 * n as f64 + 100.0,
            sum_lower: 100.0,
        }
    }

    pub fn rows(&self) -> usize {
        2 * self.n + 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("problem.n", "must be at least 1"));
        }
        if !(self.box_upper > 0.0 && self.box_upper.is_finite()) {
            return Err(Error::invalid("problem.box_upper", "must be positive and finite"));
        }
        if !self.sum_lower.is_finite() || !self.sum_upper.is_finite() || self.sum_lower >= self.sum_upper {
            return Err(Error::invalid("problem.sum_lower", "must be finite and below problem.sum_upper"));
        }
        let (lo, hi) = self.sum_window();
        if lo >= hi {
            return Err(Error::invalid(
                "problem.sum_upper",
                "sum bounds do not intersect the box; the system would be infeasible",
            ));
        }
        Ok(())
    }

    fn sum_window(&self) -> (f64, f64) {
        let cap = self.n as f64 * self.box_upper;
        (self.sum_lower.max(0.0), self.sum_upper.min(cap))
    }

    /// A point strictly inside the polytope on the diagonal. With the
    /// default bounds this is `(100, ..., 100)`.
    pub fn interior_witness(&self) -> Vec<f64> {
        let n = self.n as f64;
        let half = 0.5 * self.box_upper;
        let (lo, hi) = self.sum_window();
        let c = if lo < n * half && n * half < hi {
            half
        } else {
            0.5 * (lo + hi) / n
        };
        vec![c; self.n]
    }
}

pub fn generate_model_problem(spec: &ModelProblemSpec) -> Result<InequalitySystem> {
    spec.validate()?;
    let n = spec.n;
    let m = spec.rows();
    let mut coeffs = vec![0.0; m * n];
    let mut rhs = Vec::with_capacity(m);
    for i in 0..n {
        coeffs[i * n + i] = 1.0;
        rhs.push(spec.box_upper);
    }
    for i in 0..n {
        coeffs[(n + i) * n + i] = -1.0;
        rhs.push(0.0);
    }
    coeffs[2 * n * n..(2 * n + 1) * n].fill(1.0);
    rhs.push(spec.sum_upper);
    coeffs[(2 * n + 1) * n..].fill(-1.0);
    rhs.push(-spec.sum_lower);
    InequalitySystem::from_flat(n, coeffs, rhs)
}

/// A random dense system with a known interior point.
///
/// Coefficients are uniform in `[-1, 1]`, the witness is uniform in
/// `[-1, 1]^n`, and each row holds at the witness with slack uniform in
/// `[0.1, 1]`. Exactly `m` rows; the polytope need not be bounded.
pub fn random_feasible_system(n: usize, m: usize, seed: u64) -> Result<(InequalitySystem, Vec<f64>)> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if m == 0 {
        return Err(Error::invalid("m", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let witness: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    while rows.len() < m {
        let row: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if row.iter().all(|a| a.abs() < 1e-6) {
            continue;
        }
        let at: f64 = row.iter().zip(&witness).map(|(a, w)| a * w).sum();
        rhs.push(at + rng.random_range(0.1..1.0));
        rows.push(row);
    }
    Ok((InequalitySystem::new(rows, rhs)?, witness))
}
