//! Inequality systems `A x <= b` and the pointwise operators built on them.
//!
//! Row `i` of a system defines the half-space `<a_i, x> <= b_i` and its
//! bounding hyperplane. Every operator here is a pure function of the
//! system and the point; rows are indexed from zero.
//!
//! The positive slice is evaluated by [`slice_kernel`], which is generic over
//! [`Arith`] so that its arithmetic can be counted by an instrumented scalar
//! type. Counting convention: one operation per scalar multiply, add,
//! subtract, divide and compare. A dot product of length `n` costs `2n - 1`
//! (the first product seeds the accumulator). A violated row therefore costs
//! `(2n - 1) + 1` for the residual, `1` for the comparison against zero,
//! `2n - 1` for `|a_i|^2`, `1` for the division and `n` for the scaling:
//! `5n + 1` in total. A satisfied row stops after the comparison at `2n + 1`.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Sub};

use crate::error::{Error, Result};

/// Scalar arithmetic needed by [`slice_kernel`].
pub trait Arith:
    Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn zero() -> Self;
}

impl Arith for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
}

#[inline]
fn generic_dot<T: Arith>(a: &[T], b: &[T]) -> T {
    let mut terms = a.iter().zip(b).map(|(&p, &q)| p * q);
    match terms.next() {
        Some(first) => terms.fold(first, |acc, t| acc + t),
        None => T::zero(),
    }
}

/// Writes the positive slice of `x` with respect to the hyperplane
/// `<row, x> = rhs` into `out` and reports whether the inequality is violated.
///
/// Satisfied rows (residual `<= 0`) leave `out` filled with zeros.
pub fn slice_kernel<T: Arith>(row: &[T], rhs: T, x: &[T], out: &mut [T]) -> bool {
    debug_assert_eq!(row.len(), x.len());
    debug_assert_eq!(row.len(), out.len());
    let residual = generic_dot(row, x) - rhs;
    if residual.partial_cmp(&T::zero()) != Some(Ordering::Greater) {
        out.fill(T::zero());
        return false;
    }
    let norm_sq = generic_dot(row, row);
    let scale = residual / norm_sq;
    for (o, &a) in out.iter_mut().zip(row) {
        *o = scale * a;
    }
    true
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    generic_dot(a, b)
}

#[inline]
pub(crate) fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// A dense system of `m` linear inequalities in `n` unknowns.
///
/// Rows are stored row-major. `|a_i|^2` is cached per row and refreshed
/// whenever a row is replaced.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalitySystem {
    n: usize,
    coeffs: Vec<f64>,
    rhs: Vec<f64>,
    norms_sq: Vec<f64>,
}

impl InequalitySystem {
    /// Builds a system from explicit rows.
    pub fn new(rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        let n = rows.first().map(Vec::len).unwrap_or(0);
        let mut coeffs = Vec::with_capacity(rows.len() * n);
        for row in &rows {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: row.len(),
                });
            }
            coeffs.extend_from_slice(row);
        }
        Self::from_flat(n, coeffs, rhs)
    }

    /// Builds a system from a row-major coefficient buffer of length `m * n`.
    pub fn from_flat(n: usize, coeffs: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "dimension must be positive"));
        }
        if rhs.is_empty() {
            return Err(Error::invalid("m", "system needs at least one inequality"));
        }
        if coeffs.len() != rhs.len() * n {
            return Err(Error::Dimension {
                expected: rhs.len() * n,
                got: coeffs.len(),
            });
        }
        if let Some(i) = rhs.iter().position(|b| !b.is_finite()) {
            return Err(Error::invalid("rhs", format!("entry {i} is not finite")));
        }
        if let Some(k) = coeffs.iter().position(|a| !a.is_finite()) {
            return Err(Error::invalid(
                "rows",
                format!("row {} has a non-finite coefficient", k / n),
            ));
        }
        let norms_sq: Vec<f64> = coeffs.chunks_exact(n).map(|r| dot(r, r)).collect();
        if let Some(row) = norms_sq.iter().position(|&s| s == 0.0) {
            return Err(Error::ZeroRow { row });
        }
        Ok(Self {
            n,
            coeffs,
            rhs,
            norms_sq,
        })
    }

    /// Dimension of the space.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of inequalities.
    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coeffs[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coeffs.chunks_exact(self.n)
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Cached `|a_i|^2`.
    pub fn row_norm_sq(&self, i: usize) -> f64 {
        self.norms_sq[i]
    }

    /// Replaces row `i`, refreshing its cached norm.
    pub fn set_row(&mut self, i: usize, row: &[f64]) -> Result<()> {
        self.check_index(i)?;
        self.check_dim(row.len())?;
        let norm_sq = dot(row, row);
        if norm_sq == 0.0 || !norm_sq.is_finite() {
            return Err(Error::ZeroRow { row: i });
        }
        self.coeffs[i * self.n..(i + 1) * self.n].copy_from_slice(row);
        self.norms_sq[i] = norm_sq;
        Ok(())
    }

    pub fn set_rhs(&mut self, i: usize, b: f64) -> Result<()> {
        self.check_index(i)?;
        if !b.is_finite() {
            return Err(Error::invalid("rhs", "right-hand side must be finite"));
        }
        self.rhs[i] = b;
        Ok(())
    }

    pub(crate) fn rhs_mut(&mut self) -> &mut [f64] {
        &mut self.rhs
    }

    /// Copy of the rows in `range`, as a system of its own.
    pub fn subsystem(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::RowIndex {
                index: range.end,
                m: self.len(),
            });
        }
        Ok(Self {
            n: self.n,
            coeffs: self.coeffs[range.start * self.n..range.end * self.n].to_vec(),
            rhs: self.rhs[range.clone()].to_vec(),
            norms_sq: self.norms_sq[range].to_vec(),
        })
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::RowIndex {
                index: i,
                m: self.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got,
            });
        }
        Ok(())
    }

    #[inline]
    fn residual_unchecked(&self, i: usize, x: &[f64]) -> f64 {
        dot(self.row(i), x) - self.rhs[i]
    }
}

/// Positive slice of the reflection vector for one row.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceResult {
    pub direction: Vec<f64>,
    pub violated: bool,
}

impl SliceResult {
    /// The violation flag as the 0/1 count it contributes to `h`.
    pub fn flag(&self) -> usize {
        usize::from(self.violated)
    }
}

/// `<a_i, x> - b_i`; positive exactly when `x` violates row `i`.
pub fn residual(sys: &InequalitySystem, i: usize, x: &[f64]) -> Result<f64> {
    sys.check_index(i)?;
    sys.check_dim(x.len())?;
    Ok(sys.residual_unchecked(i, x))
}

/// `((<a_i, x> - b_i) / |a_i|^2) a_i`.
pub fn reflection_vector(sys: &InequalitySystem, i: usize, x: &[f64]) -> Result<Vec<f64>> {
    let scale = residual(sys, i, x)? / sys.row_norm_sq(i);
    Ok(sys.row(i).iter().map(|&a| scale * a).collect())
}

/// Orthogonal projection of `x` onto the hyperplane of row `i`.
pub fn orthogonal_projection(sys: &InequalitySystem, i: usize, x: &[f64]) -> Result<Vec<f64>> {
    let rho = reflection_vector(sys, i, x)?;
    Ok(x.iter().zip(&rho).map(|(&xi, &r)| xi - r).collect())
}

pub fn positive_slice(sys: &InequalitySystem, i: usize, x: &[f64]) -> Result<SliceResult> {
    sys.check_index(i)?;
    sys.check_dim(x.len())?;
    let mut direction = vec![0.0; sys.dim()];
    let violated = slice_kernel(sys.row(i), sys.rhs()[i], x, &mut direction);
    Ok(SliceResult {
        direction,
        violated,
    })
}

/// Pseudo-projection direction: the mean of the non-zero positive slices,
/// together with their count `h`.
///
/// Sums in ascending row order using the cached row norms. When no row is
/// violated the direction is the zero vector and `h = 0`.
pub fn phi(sys: &InequalitySystem, x: &[f64]) -> Result<(Vec<f64>, usize)> {
    sys.check_dim(x.len())?;
    let mut sum = vec![0.0; sys.dim()];
    let mut h = 0usize;
    for i in 0..sys.len() {
        let r = sys.residual_unchecked(i, x);
        if r > 0.0 {
            h += 1;
            let scale = r / sys.row_norm_sq(i);
            for (s, &a) in sum.iter_mut().zip(sys.row(i)) {
                *s += scale * a;
            }
        }
    }
    if h > 0 {
        let inv = h as f64;
        sum.iter_mut().for_each(|s| *s /= inv);
    }
    Ok((sum, h))
}

/// `lambda * phi(x) / |phi(x)|`, a step of fixed length `lambda`.
pub fn psi(sys: &InequalitySystem, x: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_positive("lambda", lambda)?;
    let (direction, h) = phi(sys, x)?;
    let len = norm(&direction);
    if h == 0 || len == 0.0 {
        return Err(Error::PhiZero);
    }
    Ok(direction.iter().map(|&d| lambda * d / len).collect())
}

/// Whether `x` satisfies row `i` up to a normalized violation below `eps`.
pub fn eps_satisfies(sys: &InequalitySystem, i: usize, x: &[f64], eps: f64) -> Result<bool> {
    check_positive("eps", eps)?;
    let r = residual(sys, i, x)?;
    Ok(row_within(sys, i, r, eps))
}

#[inline]
fn row_within(sys: &InequalitySystem, i: usize, r: f64, eps: f64) -> bool {
    r <= 0.0 || r.abs() / sys.row_norm_sq(i).sqrt() < eps
}

/// Whether `x` lies in the polytope with precision `eps`.
pub fn eps_membership(sys: &InequalitySystem, x: &[f64], eps: f64) -> Result<bool> {
    check_positive("eps", eps)?;
    sys.check_dim(x.len())?;
    Ok((0..sys.len()).all(|i| row_within(sys, i, sys.residual_unchecked(i, x), eps)))
}

/// Largest normalized positive residual, `max_i max(r_i, 0) / |a_i|`.
pub fn max_relative_violation(sys: &InequalitySystem, x: &[f64]) -> Result<f64> {
    sys.check_dim(x.len())?;
    Ok((0..sys.len())
        .map(|i| sys.residual_unchecked(i, x).max(0.0) / sys.row_norm_sq(i).sqrt())
        .fold(0.0, f64::max))
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::invalid(name, format!("must be positive and finite, got {value}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_row(a: &[f64], b: f64) -> InequalitySystem {
        InequalitySystem::new(vec![a.to_vec()], vec![b]).unwrap()
    }

    fn unit_box() -> InequalitySystem {
        InequalitySystem::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn residual_examples() {
        assert_eq!(residual(&one_row(&[3.0, 4.0], 5.0), 0, &[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(residual(&one_row(&[1.0, 0.0], 0.0), 0, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(residual(&one_row(&[1.0, 0.0], 1.0), 0, &[0.5, 7.0]).unwrap(), -0.5);
    }

    #[test]
    fn residual_errors() {
        let sys = one_row(&[1.0, 0.0], 1.0);
        assert!(matches!(
            residual(&sys, 1, &[0.0, 0.0]),
            Err(Error::RowIndex { index: 1, m: 1 })
        ));
        assert!(matches!(
            residual(&sys, 0, &[0.0]),
            Err(Error::Dimension { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn zero_row_rejected() {
        let err = InequalitySystem::new(vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![1.0, 1.0]);
        assert!(matches!(err, Err(Error::ZeroRow { row: 1 })));
        let mut sys = unit_box();
        assert!(matches!(sys.set_row(0, &[0.0, 0.0]), Err(Error::ZeroRow { row: 0 })));
    }

    #[test]
    fn set_row_refreshes_norm() {
        let mut sys = unit_box();
        sys.set_row(1, &[3.0, 4.0]).unwrap();
        assert_eq!(sys.row_norm_sq(1), 25.0);
        assert_eq!(sys.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn reflection_examples() {
        let sys = one_row(&[0.0, 2.0], 2.0);
        assert_eq!(reflection_vector(&sys, 0, &[0.0, 3.0]).unwrap(), vec![0.0, 2.0]);
        assert_eq!(reflection_vector(&sys, 0, &[5.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        let sys = one_row(&[1.0, 0.0], 0.0);
        assert_eq!(reflection_vector(&sys, 0, &[-2.0, 5.0]).unwrap(), vec![-2.0, 0.0]);
    }

    #[test]
    fn projection_examples() {
        let sys = one_row(&[0.0, 2.0], 2.0);
        assert_eq!(orthogonal_projection(&sys, 0, &[0.0, 3.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(orthogonal_projection(&sys, 0, &[4.0, 1.0]).unwrap(), vec![4.0, 1.0]);
        let sys = one_row(&[1.0, 1.0], 0.0);
        assert_eq!(orthogonal_projection(&sys, 0, &[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn slice_examples() {
        let sys = one_row(&[1.0, 0.0], 1.0);
        let s = positive_slice(&sys, 0, &[0.5, 7.0]).unwrap();
        assert_eq!((s.direction, s.violated), (vec![0.0, 0.0], false));
        let s = positive_slice(&sys, 0, &[3.0, 0.0]).unwrap();
        assert_eq!((s.direction, s.violated), (vec![2.0, 0.0], true));
        let s = positive_slice(&sys, 0, &[1.0, -4.0]).unwrap();
        assert_eq!((s.flag(), s.direction), (0, vec![0.0, 0.0]));
    }

    #[test]
    fn phi_examples() {
        let sys = unit_box();
        assert_eq!(phi(&sys, &[3.0, 2.0]).unwrap(), (vec![1.0, 0.5], 2));
        assert_eq!(phi(&sys, &[0.0, 0.0]).unwrap(), (vec![0.0, 0.0], 0));
        assert_eq!(phi(&sys, &[3.0, 0.0]).unwrap(), (vec![2.0, 0.0], 1));
    }

    #[test]
    fn psi_examples() {
        // phi = (3, 4): one row along (3, 4) with residual 25
        let sys = one_row(&[3.0, 4.0], 0.0);
        let x = [3.0, 4.0];
        let p = psi(&sys, &x, 2.0).unwrap();
        assert!((p[0] - 1.2).abs() < 1e-15 && (p[1] - 1.6).abs() < 1e-15);
        let sys = one_row(&[0.0, 1.0], 0.0);
        assert_eq!(psi(&sys, &[0.0, 5.0], 1.0).unwrap(), vec![0.0, 1.0]);
        assert!(matches!(psi(&sys, &[0.0, -1.0], 1.0), Err(Error::PhiZero)));
        assert!(matches!(psi(&sys, &[0.0, 5.0], 0.0), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn eps_examples() {
        let sys = one_row(&[1.0, 0.0], 1.0);
        assert!(eps_satisfies(&sys, 0, &[0.0, 0.0], 1e-300).unwrap());
        assert!(eps_satisfies(&sys, 0, &[1.0 + 5e-8, 0.0], 1e-7).unwrap());
        assert!(!eps_satisfies(&sys, 0, &[2.0, 0.0], 1e-7).unwrap());
        assert!(eps_satisfies(&sys, 0, &[0.0, 0.0], -1.0).is_err());

        let sys = unit_box();
        let x = [1.0 + 5e-8, 1.0 + 5e-8];
        assert!(eps_membership(&sys, &[0.0, 0.0], 1e-7).unwrap());
        assert!(eps_membership(&sys, &x, 1e-7).unwrap());
        assert!(!eps_membership(&sys, &x, 1e-9).unwrap());
    }

    #[test]
    fn max_violation_examples() {
        assert_eq!(max_relative_violation(&unit_box(), &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(max_relative_violation(&one_row(&[1.0, 0.0], 1.0), &[3.0, 0.0]).unwrap(), 2.0);
        assert_eq!(max_relative_violation(&one_row(&[2.0, 0.0], 2.0), &[3.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn subsystem_keeps_norms() {
        let sys = InequalitySystem::new(
            vec![vec![1.0, 0.0], vec![3.0, 4.0], vec![0.0, 2.0]],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let sub = sys.subsystem(1..3).unwrap();
        assert_eq!(sub.len(), 2);
        assert_eq!(sub.row_norm_sq(0), 25.0);
        assert_eq!(sub.rhs(), &[2.0, 3.0]);
        assert!(sys.subsystem(2..4).is_err());
    }

    fn system_and_point() -> impl Strategy<Value = (InequalitySystem, Vec<f64>)> {
        (1usize..8, 1usize..12).prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(
                    prop::collection::vec(-5.0f64..5.0, n).prop_filter("non-zero", |r| {
                        r.iter().any(|v| v.abs() > 1e-3)
                    }),
                    m,
                ),
                prop::collection::vec(-5.0f64..5.0, m),
                prop::collection::vec(-5.0f64..5.0, n),
            )
                .prop_map(|(rows, rhs, x)| (InequalitySystem::new(rows, rhs).unwrap(), x))
        })
    }

    proptest! {
        #[test]
        fn cached_norms_match((sys, _x) in system_and_point()) {
            for (i, row) in sys.rows().enumerate() {
                let fresh: f64 = row.iter().map(|a| a * a).sum();
                prop_assert!((sys.row_norm_sq(i) - fresh).abs() <= 1e-12 * fresh);
            }
        }

        #[test]
        fn slice_agrees_with_reflection((sys, x) in system_and_point()) {
            for i in 0..sys.len() {
                let s = positive_slice(&sys, i, &x).unwrap();
                let r = residual(&sys, i, &x).unwrap();
                prop_assert_eq!(s.violated, r > 0.0);
                let expected = if s.violated {
                    reflection_vector(&sys, i, &x).unwrap()
                } else {
                    vec![0.0; sys.dim()]
                };
                for (a, b) in s.direction.iter().zip(&expected) {
                    prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
                }
            }
        }

        #[test]
        fn eps_membership_is_conjunction((sys, x) in system_and_point(), eps in 1e-3f64..2.0) {
            let all = (0..sys.len()).all(|i| eps_satisfies(&sys, i, &x, eps).unwrap());
            prop_assert_eq!(eps_membership(&sys, &x, eps).unwrap(), all);
        }
    }
}
