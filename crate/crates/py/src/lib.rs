//! Python bindings: `import pymodap`.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use modap::cost::{self, CostParams, UpdateBreadth};
use modap::engine::run_parallel;
use modap::geometry;
use modap::harness::problem::random_feasible_system as random_system;
use modap::{DynamicSystemSource, DynamicsSpec, EngineConfig, ModelProblemSpec, SolverConfig, Variant};

create_exception!(pymodap, ModapError, PyException);

fn py_err(e: modap::Error) -> PyErr {
    ModapError::new_err(e.to_string())
}

/// A dense system of linear inequalities `A x <= b`.
#[pyclass(name = "InequalitySystem", module = "pymodap")]
struct PySystem {
    inner: modap::InequalitySystem,
}

#[pymethods]
impl PySystem {
    #[new]
    fn new(rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> PyResult<Self> {
        let inner = modap::InequalitySystem::new(rows, rhs).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("InequalitySystem(n={}, m={})", self.inner.dim(), self.inner.len())
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(<[f64]>::to_vec).collect()
    }

    fn rhs(&self) -> Vec<f64> {
        self.inner.rhs().to_vec()
    }

    fn residual(&self, i: usize, x: Vec<f64>) -> PyResult<f64> {
        geometry::residual(&self.inner, i, &x).map_err(py_err)
    }

    fn reflection_vector(&self, i: usize, x: Vec<f64>) -> PyResult<Vec<f64>> {
        geometry::reflection_vector(&self.inner, i, &x).map_err(py_err)
    }

    fn orthogonal_projection(&self, i: usize, x: Vec<f64>) -> PyResult<Vec<f64>> {
        geometry::orthogonal_projection(&self.inner, i, &x).map_err(py_err)
    }

    /// `(direction, violated)`.
    fn positive_slice(&self, i: usize, x: Vec<f64>) -> PyResult<(Vec<f64>, bool)> {
        let s = geometry::positive_slice(&self.inner, i, &x).map_err(py_err)?;
        Ok((s.direction, s.violated))
    }

    /// `(phi, h)`.
    fn phi(&self, x: Vec<f64>) -> PyResult<(Vec<f64>, usize)> {
        geometry::phi(&self.inner, &x).map_err(py_err)
    }

    #[pyo3(signature = (x, lam = 1.0))]
    fn psi(&self, x: Vec<f64>, lam: f64) -> PyResult<Vec<f64>> {
        geometry::psi(&self.inner, &x, lam).map_err(py_err)
    }

    #[pyo3(signature = (x, eps = 1e-7))]
    fn eps_membership(&self, x: Vec<f64>, eps: f64) -> PyResult<bool> {
        geometry::eps_membership(&self.inner, &x, eps).map_err(py_err)
    }

    fn max_relative_violation(&self, x: Vec<f64>) -> PyResult<f64> {
        geometry::max_relative_violation(&self.inner, &x).map_err(py_err)
    }

    /// The system shifted by the vector `v`.
    fn translate(&self, v: Vec<f64>) -> PyResult<Self> {
        let inner = modap::translate(&self.inner, &v).map_err(py_err)?;
        Ok(Self { inner })
    }
}

#[pyclass(name = "SolveOutcome", module = "pymodap", get_all)]
struct PyOutcome {
    status: String,
    solution: Vec<f64>,
    iterations: usize,
    virtual_time: f64,
    wall_time: f64,
    /// `(k, h, step_norm, max_violation, virtual_time)` per iteration.
    trace: Vec<(usize, usize, f64, f64, f64)>,
    iterates: Option<Vec<Vec<f64>>>,
}

#[pymethods]
impl PyOutcome {
    #[getter]
    fn converged(&self) -> bool {
        self.status == "Converged"
    }

    fn __repr__(&self) -> String {
        format!("SolveOutcome(status={}, iterations={})", self.status, self.iterations)
    }
}

#[pyfunction]
#[pyo3(signature = (n, box_upper = None, sum_upper = None, sum_lower = None))]
fn generate_model_problem(
    n: usize,
    box_upper: Option<f64>,
    sum_upper: Option<f64>,
    sum_lower: Option<f64>,
) -> PyResult<PySystem> {
    let mut spec = ModelProblemSpec::new(n);
    spec.box_upper = box_upper.unwrap_or(spec.box_upper);
    spec.sum_upper = sum_upper.unwrap_or(spec.sum_upper);
    spec.sum_lower = sum_lower.unwrap_or(spec.sum_lower);
    let inner = modap::generate_model_problem(&spec).map_err(py_err)?;
    Ok(PySystem { inner })
}

/// `(system, witness)` with the witness strictly feasible.
#[pyfunction]
#[pyo3(signature = (n, m, seed = 0))]
fn random_feasible_system(n: usize, m: usize, seed: u64) -> PyResult<(PySystem, Vec<f64>)> {
    let (inner, witness) = random_system(n, m, seed).map_err(py_err)?;
    Ok((PySystem { inner }, witness))
}

/// Runs AP or ModAP. `workers = None` uses the sequential engine; a
/// positive `rate` translates the system over virtual time.
#[pyfunction]
#[pyo3(signature = (
    system, variant = "modap", eps = 1e-7, lam = 1.0, max_iterations = 50_000,
    initial_point = None, rate = 0.0, seconds_per_iteration = 0.01,
    workers = None, ordered_reduce = true, record_iterates = false,
))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    system: PyRef<'_, PySystem>,
    variant: &str,
    eps: f64,
    lam: f64,
    max_iterations: usize,
    initial_point: Option<Vec<f64>>,
    rate: f64,
    seconds_per_iteration: f64,
    workers: Option<usize>,
    ordered_reduce: bool,
    record_iterates: bool,
) -> PyResult<PyOutcome> {
    let config = SolverConfig {
        eps,
        lambda: lam,
        variant: variant.parse::<Variant>().map_err(py_err)?,
        max_iterations,
        record_trace: true,
        record_iterates,
        initial_point,
    };
    let dynamics = if rate > 0.0 {
        DynamicsSpec::translation(rate, seconds_per_iteration)
    } else {
        DynamicsSpec::stationary()
    };
    let sys = system.inner.clone();
    let out = py
        .detach(move || {
            let mut source = DynamicSystemSource::new(sys, dynamics)?;
            match workers {
                None => modap::solve(&mut source, &config),
                Some(k) => run_parallel(
                    &mut source,
                    &config,
                    &EngineConfig {
                        workers: k,
                        ordered_reduce,
                    },
                ),
            }
        })
        .map_err(py_err)?;
    Ok(PyOutcome {
        status: out.status.to_string(),
        solution: out.solution,
        iterations: out.iterations,
        virtual_time: out.virtual_time,
        wall_time: out.wall_time,
        trace: out
            .trace
            .unwrap_or_default()
            .into_iter()
            .map(|r| (r.k, r.h, r.step_norm, r.max_violation, r.virtual_time))
            .collect(),
        iterates: out.iterates,
    })
}

fn params(n: u64, m: u64, tau_op: f64, tau_tr: f64, latency: f64, breadth: &str) -> PyResult<CostParams> {
    Ok(CostParams {
        n,
        m,
        tau_op,
        tau_tr,
        latency,
        breadth: breadth.parse::<UpdateBreadth>().map_err(py_err)?,
    })
}

/// Counts, times and `k_max` for one configuration, as a dict.
#[pyfunction]
#[pyo3(signature = (
    n, m, tau_op = cost::DEFAULT_TAU_OP, tau_tr = cost::DEFAULT_TAU_TR,
    latency = cost::DEFAULT_LATENCY, breadth = "single",
))]
fn cost_report<'py>(
    py: Python<'py>,
    n: u64,
    m: u64,
    tau_op: f64,
    tau_tr: f64,
    latency: f64,
    breadth: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let r = cost::report(&params(n, m, tau_op, tau_tr, latency, breadth)?).map_err(py_err)?;
    let d = PyDict::new(py);
    let (c, t) = (r.counts, r.times);
    for (k, v) in [("c_s", c.c_s), ("c_map", c.c_map), ("c_a", c.c_a), ("c_r", c.c_r), ("c_p", c.c_p), ("c_u", c.c_u)] {
        d.set_item(k, v)?;
    }
    for (k, v) in [("t_s", t.t_s), ("t_map", t.t_map), ("t_r", t.t_r), ("t_a", t.t_a), ("t_p", t.t_p)] {
        d.set_item(k, v)?;
    }
    d.set_item("l", r.list_len)?;
    d.set_item("k_max", r.k_max)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (
    n, m, tau_op = cost::DEFAULT_TAU_OP, tau_tr = cost::DEFAULT_TAU_TR,
    latency = cost::DEFAULT_LATENCY, breadth = "single",
))]
fn k_max(n: u64, m: u64, tau_op: f64, tau_tr: f64, latency: f64, breadth: &str) -> PyResult<f64> {
    cost::k_max(&params(n, m, tau_op, tau_tr, latency, breadth)?).map_err(py_err)
}

#[pymodule]
fn pymodap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ModapError", m.py().get_type::<ModapError>())?;
    m.add_class::<PySystem>()?;
    m.add_class::<PyOutcome>()?;
    m.add_function(wrap_pyfunction!(generate_model_problem, m)?)?;
    m.add_function(wrap_pyfunction!(random_feasible_system, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(cost_report, m)?)?;
    m.add_function(wrap_pyfunction!(k_max, m)?)?;
    Ok(())
}
