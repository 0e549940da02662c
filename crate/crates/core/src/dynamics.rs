//! Time dependence of the right-hand side: the polytope translates at a
//! constant velocity while the coefficient rows stay fixed.
//!
//! Translating `{A x <= b}` by `v` gives `{A x <= b + A v}`. A source keeps
//! the base system, the elapsed time `T` and the per-row projections
//! `<a_i, velocity>`, so the current right-hand side is always
//! `b_i + T <a_i, velocity>`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, InequalitySystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DynamicsMode {
    #[default]
    Stationary,
    Translation,
}

impl FromStr for DynamicsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stationary" => Ok(Self::Stationary),
            "translation" => Ok(Self::Translation),
            other => Err(Error::invalid(
                "dynamics.mode",
                format!("expected `stationary` or `translation`, got `{other}`"),
            )),
        }
    }
}

impl fmt::Display for DynamicsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Stationary => "stationary",
            Self::Translation => "translation",
        })
    }
}

/// How much time one solver iteration represents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clock {
    /// Every iteration advances time by a fixed quantum.
    VirtualPerIteration { seconds_per_iteration: f64 },
    /// Time is read from the monotonic system clock.
    WallClock,
}

impl Default for Clock {
    fn default() -> Self {
        Clock::VirtualPerIteration {
            seconds_per_iteration: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DynamicsSpec {
    pub mode: DynamicsMode,
    /// Units per second added to each coordinate.
    pub rate: f64,
    pub clock: Clock,
    /// Unit direction of travel. When unset every coordinate moves by
    /// `rate`; when set the polytope moves along it with the same total
    /// speed `sqrt(n) * rate`.
    pub direction: Option<Vec<f64>>,
}

impl DynamicsSpec {
    pub fn stationary() -> Self {
        Self::default()
    }

    /// Coordinate-wise translation at `rate` units per second, with time
    /// advanced by `seconds_per_iteration` on every iteration.
    pub fn translation(rate: f64, seconds_per_iteration: f64) -> Self {
        Self {
            mode: DynamicsMode::Translation,
            rate,
            clock: Clock::VirtualPerIteration {
                seconds_per_iteration,
            },
            direction: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::invalid("dynamics.rate", format!("must be finite and non-negative, got {}", self.rate)));
        }
        if let Clock::VirtualPerIteration { seconds_per_iteration } = self.clock {
            if !(seconds_per_iteration >= 0.0 && seconds_per_iteration.is_finite()) {
                return Err(Error::invalid(
                    "dynamics.seconds_per_iteration",
                    format!("must be finite and non-negative, got {seconds_per_iteration}"),
                ));
            }
        }
        if let Some(d) = &self.direction {
            if (norm(d) - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("dynamics.direction", "must be a unit vector"));
            }
        }
        Ok(())
    }

    /// Displacement per second.
    pub fn velocity(&self, n: usize) -> Vec<f64> {
        match (&self.mode, &self.direction) {
            (DynamicsMode::Stationary, _) => vec![0.0; n],
            (DynamicsMode::Translation, None) => vec![self.rate; n],
            (DynamicsMode::Translation, Some(u)) => {
                let speed = self.rate * (n as f64).sqrt();
                u.iter().map(|&c| speed * c).collect()
            }
        }
    }
}

/// `{A x <= b}` translated by `v`: same rows, right-hand side `b + A v`.
pub fn translate(sys: &InequalitySystem, v: &[f64]) -> Result<InequalitySystem> {
    sys.check_dim(v.len())?;
    let mut out = sys.clone();
    for (i, b) in out.rhs_mut().iter_mut().enumerate() {
        *b += dot(sys.row(i), v);
    }
    Ok(out)
}

/// A system whose right-hand side moves with time.
#[derive(Debug, Clone)]
pub struct DynamicSystemSource {
    base_rhs: Vec<f64>,
    current: InequalitySystem,
    spec: DynamicsSpec,
    velocity: Vec<f64>,
    rate_proj: Vec<f64>,
    time: f64,
    anchor: Instant,
}

impl DynamicSystemSource {
    pub fn new(base: InequalitySystem, spec: DynamicsSpec) -> Result<Self> {
        spec.validate()?;
        if let Some(d) = &spec.direction {
            base.check_dim(d.len())?;
        }
        let velocity = spec.velocity(base.dim());
        let rate_proj = base.rows().map(|row| dot(row, &velocity)).collect();
        Ok(Self {
            base_rhs: base.rhs().to_vec(),
            current: base,
            spec,
            velocity,
            rate_proj,
            time: 0.0,
            anchor: Instant::now(),
        })
    }

    pub fn stationary(base: InequalitySystem) -> Self {
        Self::new(base, DynamicsSpec::stationary()).expect("stationary spec is always valid")
    }

    pub fn spec(&self) -> &DynamicsSpec {
        &self.spec
    }

    /// The system at the current time.
    pub fn system(&self) -> &InequalitySystem {
        &self.current
    }

    pub fn snapshot(&self) -> InequalitySystem {
        self.current.clone()
    }

    /// The system at time zero.
    pub fn base(&self) -> InequalitySystem {
        let mut base = self.current.clone();
        base.rhs_mut().copy_from_slice(&self.base_rhs);
        base
    }

    pub fn current_time(&self) -> f64 {
        self.time
    }

    pub fn cumulative_displacement(&self) -> Vec<f64> {
        self.velocity.iter().map(|&v| v * self.time).collect()
    }

    /// Moves time forward by `elapsed` seconds.
    pub fn advance(&mut self, elapsed: f64) -> Result<()> {
        if !(elapsed >= 0.0 && elapsed.is_finite()) {
            return Err(Error::invalid("elapsed", format!("must be finite and non-negative, got {elapsed}")));
        }
        self.time += elapsed;
        if self.spec.mode == DynamicsMode::Translation {
            let t = self.time;
            for ((b, &b0), &p) in self.current.rhs_mut().iter_mut().zip(&self.base_rhs).zip(&self.rate_proj) {
                *b = b0 + t * p;
            }
        }
        Ok(())
    }

    /// Restarts the wall-clock reference point.
    pub fn start_clock(&mut self) {
        self.anchor = Instant::now();
    }

    /// Advances by one iteration's worth of time and returns the amount.
    pub fn tick(&mut self) -> Result<f64> {
        let elapsed = match self.spec.clock {
            Clock::VirtualPerIteration { seconds_per_iteration } => seconds_per_iteration,
            Clock::WallClock => {
                let now = Instant::now();
                let dt = now.duration_since(self.anchor).as_secs_f64();
                self.anchor = now;
                dt
            }
        };
        self.advance(elapsed)?;
        Ok(elapsed)
    }

    /// A replica holding only the rows in `range`, at the same time.
    pub fn restrict(&self, range: Range<usize>) -> Result<Self> {
        let current = self.current.subsystem(range.clone())?;
        Ok(Self {
            base_rhs: self.base_rhs[range.clone()].to_vec(),
            current,
            spec: self.spec.clone(),
            velocity: self.velocity.clone(),
            rate_proj: self.rate_proj[range].to_vec(),
            time: self.time,
            anchor: self.anchor,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::eps_membership;
    use proptest::prelude::*;

    fn box2() -> InequalitySystem {
        InequalitySystem::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn translate_examples() {
        let sys = InequalitySystem::new(vec![vec![1.0, 0.0]], vec![1.0]).unwrap();
        assert_eq!(translate(&sys, &[0.5, 0.0]).unwrap().rhs(), &[1.5]);
        assert_eq!(translate(&sys, &[0.0, 0.0]).unwrap(), sys);

        let sys = InequalitySystem::new(vec![vec![-1.0, 0.0]], vec![0.0]).unwrap();
        let moved = translate(&sys, &[2.0, 0.0]).unwrap();
        assert_eq!(moved.rhs(), &[-2.0]);
        // {x1 >= 0} moves to {x1 >= 2}
        assert!(eps_membership(&sys, &[0.5, 0.0], 1e-9).unwrap());
        assert!(eps_membership(&moved, &[2.5, 0.0], 1e-9).unwrap());
        assert!(!eps_membership(&moved, &[1.0, 0.0], 1e-9).unwrap());
        assert!(translate(&sys, &[1.0]).is_err());
    }

    #[test]
    fn stationary_never_moves() {
        let mut src = DynamicSystemSource::stationary(box2());
        src.advance(123.0).unwrap();
        assert_eq!(src.snapshot(), box2());
        assert_eq!(src.current_time(), 123.0);
    }

    #[test]
    fn virtual_clock_tick() {
        let spec = DynamicsSpec::translation(10.0, 0.1);
        let mut src = DynamicSystemSource::new(box2(), spec).unwrap();
        assert_eq!(src.snapshot(), box2());
        src.advance(0.0).unwrap();
        assert_eq!(src.snapshot(), box2());
        let dt = src.tick().unwrap();
        assert_eq!(dt, 0.1);
        assert_eq!(src.system().rhs(), &[2.0, 2.0]);
        assert_eq!(src.cumulative_displacement(), vec![1.0, 1.0]);
        assert_eq!(src.system().row(0), box2().row(0));
    }

    #[test]
    fn split_advance_matches_single() {
        let spec = DynamicsSpec::translation(3.7, 0.1);
        let mut a = DynamicSystemSource::new(box2(), spec.clone()).unwrap();
        let mut b = DynamicSystemSource::new(box2(), spec).unwrap();
        a.advance(0.05).unwrap();
        a.advance(0.05).unwrap();
        b.advance(0.1).unwrap();
        for (x, y) in a.system().rhs().iter().zip(b.system().rhs()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn snapshot_matches_direct_translation() {
        let spec = DynamicsSpec::translation(2.0, 0.25);
        let mut src = DynamicSystemSource::new(box2(), spec).unwrap();
        for _ in 0..3 {
            src.tick().unwrap();
        }
        let direct = translate(&box2(), &src.cumulative_displacement()).unwrap();
        assert_eq!(src.snapshot(), direct);
    }

    #[test]
    fn direction_keeps_total_speed() {
        let n = 4;
        let spec = DynamicsSpec {
            direction: Some(vec![1.0, 0.0, 0.0, 0.0]),
            ..DynamicsSpec::translation(3.0, 1.0)
        };
        let v = spec.velocity(n);
        assert!((norm(&v) - norm(&DynamicsSpec::translation(3.0, 1.0).velocity(n))).abs() < 1e-12);
        assert!((norm(&v) - (n as f64 * 9.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let mut src = DynamicSystemSource::stationary(box2());
        assert!(src.advance(-1.0).is_err());
        let bad = DynamicsSpec { rate: -1.0, ..DynamicsSpec::translation(1.0, 0.1) };
        assert!(DynamicSystemSource::new(box2(), bad).is_err());
        let bad = DynamicsSpec { direction: Some(vec![1.0, 1.0]), ..DynamicsSpec::translation(1.0, 0.1) };
        assert!(DynamicSystemSource::new(box2(), bad).is_err());
        let bad = DynamicsSpec { direction: Some(vec![1.0]), ..DynamicsSpec::translation(1.0, 0.1) };
        assert!(matches!(DynamicSystemSource::new(box2(), bad), Err(Error::Dimension { .. })));
    }

    #[test]
    fn restricted_replica_tracks_rows() {
        let sys = InequalitySystem::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            vec![1.0, 1.0, 3.0],
        )
        .unwrap();
        let mut full = DynamicSystemSource::new(sys, DynamicsSpec::translation(1.0, 0.5)).unwrap();
        let mut part = full.restrict(1..3).unwrap();
        full.tick().unwrap();
        part.tick().unwrap();
        assert_eq!(part.system().rhs(), &full.system().rhs()[1..3]);
    }

    proptest! {
        #[test]
        fn membership_is_transported(
            x in prop::collection::vec(-3.0f64..3.0, 2),
            v in prop::collection::vec(-3.0f64..3.0, 2),
        ) {
            let sys = InequalitySystem::new(
                vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, -1.0]],
                vec![1.0, 0.5, 2.0],
            ).unwrap();
            let eps = 1e-6;
            let margin = (0..3)
                .map(|i| crate::geometry::residual(&sys, i, &x).unwrap().abs() / sys.row_norm_sq(i).sqrt())
                .fold(f64::INFINITY, f64::min);
            prop_assume!(margin > 2.0 * eps);
            let moved = translate(&sys, &v).unwrap();
            let shifted: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + b).collect();
            prop_assert_eq!(
                eps_membership(&sys, &x, eps).unwrap(),
                eps_membership(&moved, &shifted, eps).unwrap()
            );
        }

        #[test]
        fn rows_never_change(steps in prop::collection::vec(0.0f64..2.0, 1..10), rate in 0.0f64..50.0) {
            let mut src = DynamicSystemSource::new(box2(), DynamicsSpec::translation(rate, 0.1)).unwrap();
            for dt in steps {
                src.advance(dt).unwrap();
                let base = box2();
                prop_assert_eq!(src.system().coefficients(), base.coefficients());
                let direct = translate(&box2(), &src.cumulative_displacement()).unwrap();
                for (a, b) in src.system().rhs().iter().zip(direct.rhs()) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }
}
