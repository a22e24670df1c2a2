//! Python bindings: spaces, sequence norms, operator summing norms,
//! domination constants and the property suite.

use anisum::opnorms::{self, LinearOperator, OpNormEstimate};
use anisum::pietsch::{self, DominationOptions, DominationWitness};
use anisum::seqnorms::{self, EstimatorConfig, NormEstimate, SequenceFamily};
use anisum::spaces::{NormKind, Space};
use anisum::suite::{self, CheckSpec, SuiteConfig};
use anisum::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(
    pyanisum,
    RegimeError,
    PyValueError,
    "Degenerate parameter regime."
);
create_exception!(pyanisum, NumericError, PyRuntimeError, "Numerical failure.");

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Regime { .. } => RegimeError::new_err(e.to_string()),
        Error::Numeric(_) => NumericError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| NumericError::new_err(e.to_string()))
}

fn config(restarts: usize, seed: u64, tol: f64) -> EstimatorConfig {
    let mut cfg = EstimatorConfig::default()
        .with_restarts(restarts)
        .with_seed(seed);
    cfg.tol = tol;
    cfg
}

/// Weighted ℓ_p space of finite dimension; `p = float("inf")` gives ℓ_∞.
#[pyclass(name = "Space", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySpace {
    inner: Space,
}

#[pymethods]
impl PySpace {
    #[new]
    #[pyo3(signature = (dim, p, weights = None))]
    fn new(dim: usize, p: f64, weights: Option<Vec<f64>>) -> PyResult<Self> {
        let kind = NormKind::from_exponent(p).map_err(py_err)?;
        let inner = match weights {
            None => Space::new(dim, kind),
            Some(w) => Space::weighted(dim, kind, w),
        }
        .map_err(py_err)?;
        Ok(PySpace { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.exponent()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    fn norm(&self, v: Vec<f64>) -> PyResult<f64> {
        self.inner.check_dim(v.len()).map_err(py_err)?;
        Ok(self.inner.norm_of(&v))
    }

    fn dual_norm(&self, f: Vec<f64>) -> PyResult<f64> {
        self.inner.check_dim(f.len()).map_err(py_err)?;
        Ok(self.inner.dual_norm_of(&f))
    }

    fn __repr__(&self) -> String {
        format!(
            "Space(dim={}, p={})",
            self.inner.dim(),
            self.inner.exponent()
        )
    }
}

/// Result of a sequence-norm computation.
#[pyclass(name = "Estimate", frozen)]
struct PyEstimate {
    inner: NormEstimate,
}

#[pymethods]
impl PyEstimate {
    #[getter]
    fn value(&self) -> f64 {
        self.inner.value
    }

    /// `"Lower"`, `"Upper"` or `"Exact"`.
    #[getter]
    fn bound(&self) -> String {
        format!("{:?}", self.inner.bound)
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.meta.converged
    }

    #[getter]
    fn exact_mode(&self) -> Option<String> {
        self.inner.meta.exact_mode.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Estimate(value={}, bound={:?})",
            self.inner.value, self.inner.bound
        )
    }
}

/// Result of a summing-norm search.
#[pyclass(name = "OpEstimate", frozen)]
struct PyOpEstimate {
    inner: OpNormEstimate,
}

#[pymethods]
impl PyOpEstimate {
    #[getter]
    fn value(&self) -> f64 {
        self.inner.value
    }

    #[getter]
    fn bound(&self) -> String {
        format!("{:?}", self.inner.bound)
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn denominator_exact(&self) -> bool {
        self.inner.denominator_exact
    }

    #[getter]
    fn witness_vectors(&self) -> Vec<Vec<f64>> {
        self.inner.witness_vectors.rows()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "OpEstimate(value={}, bound={:?})",
            self.inner.value, self.inner.bound
        )
    }
}

/// Minimal domination constant with its measure.
#[pyclass(name = "Domination", frozen)]
struct PyDomination {
    inner: DominationWitness,
}

#[pymethods]
impl PyDomination {
    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }

    #[getter]
    fn support_size(&self) -> usize {
        self.inner.measure.support_size()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.measure.weights().to_vec()
    }

    #[getter]
    fn train_residual(&self) -> f64 {
        self.inner.train_residual
    }

    #[getter]
    fn holdout_residual(&self) -> f64 {
        self.inner.holdout_residual
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Domination(c={}, support={})",
            self.inner.c,
            self.inner.measure.support_size()
        )
    }
}

/// Matrix acting from `domain` into `codomain`, one row per codomain coordinate.
#[pyclass(name = "Operator", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyOperator {
    inner: LinearOperator,
}

#[pymethods]
impl PyOperator {
    #[new]
    fn new(
        domain: PyRef<'_, PySpace>,
        codomain: PyRef<'_, PySpace>,
        matrix: Vec<Vec<f64>>,
    ) -> PyResult<Self> {
        let inner = LinearOperator::new(domain.inner.clone(), codomain.inner.clone(), matrix)
            .map_err(py_err)?;
        Ok(PyOperator { inner })
    }

    fn apply(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.domain().check_dim(u.len()).map_err(py_err)?;
        Ok(self
            .inner
            .apply(&anisum::spaces::Vector(u))
            .map_err(py_err)?
            .0)
    }

    /// `self ∘ inner`.
    fn compose(&self, inner: PyRef<'_, PyOperator>) -> PyResult<PyOperator> {
        Ok(PyOperator {
            inner: self.inner.compose(&inner.inner).map_err(py_err)?,
        })
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<f64>> {
        self.inner.matrix().to_vec()
    }

    #[pyo3(signature = (restarts = 32, seed = 0, tol = 1e-9))]
    fn norm(&self, restarts: usize, seed: u64, tol: f64) -> PyResult<PyEstimate> {
        let inner =
            opnorms::operator_norm(&self.inner, &config(restarts, seed, tol)).map_err(py_err)?;
        Ok(PyEstimate { inner })
    }
}

fn sequence(space: &PySpace, rows: Vec<Vec<f64>>) -> PyResult<SequenceFamily> {
    SequenceFamily::from_rows(space.inner.clone(), rows).map_err(py_err)
}

/// `(Σ_j ‖x_j‖^q)^{1/q}`.
#[pyfunction]
fn strong_norm(space: PyRef<'_, PySpace>, rows: Vec<Vec<f64>>, q: f64) -> PyResult<PyEstimate> {
    let inner = seqnorms::strong_norm(&sequence(&space, rows)?, q).map_err(py_err)?;
    Ok(PyEstimate { inner })
}

/// Weak `q` norm of the rows.
#[pyfunction]
#[pyo3(signature = (space, rows, q, restarts = 32, seed = 0, tol = 1e-9))]
fn weak_norm(
    space: PyRef<'_, PySpace>,
    rows: Vec<Vec<f64>>,
    q: f64,
    restarts: usize,
    seed: u64,
    tol: f64,
) -> PyResult<PyEstimate> {
    let seq = sequence(&space, rows)?;
    let inner = seqnorms::weak_norm(&seq, q, &config(restarts, seed, tol)).map_err(py_err)?;
    Ok(PyEstimate { inner })
}

/// Anisotropic `(s, q, r)` norm of the rows.
#[pyfunction]
#[pyo3(signature = (space, rows, s, q, r, restarts = 32, seed = 0, tol = 1e-9))]
#[allow(clippy::too_many_arguments)]
fn aniso_norm(
    space: PyRef<'_, PySpace>,
    rows: Vec<Vec<f64>>,
    s: f64,
    q: f64,
    r: f64,
    restarts: usize,
    seed: u64,
    tol: f64,
) -> PyResult<PyEstimate> {
    let seq = sequence(&space, rows)?;
    let inner =
        seqnorms::aniso_norm(&seq, s, q, r, &config(restarts, seed, tol)).map_err(py_err)?;
    Ok(PyEstimate { inner })
}

/// Mixed `(s; q)` norm bracket as `(lower, upper)`.
#[pyfunction]
#[pyo3(signature = (space, rows, s, q, restarts = 32, seed = 0, tol = 1e-9))]
#[allow(clippy::too_many_arguments)]
fn mixed_norm(
    space: PyRef<'_, PySpace>,
    rows: Vec<Vec<f64>>,
    s: f64,
    q: f64,
    restarts: usize,
    seed: u64,
    tol: f64,
) -> PyResult<(PyEstimate, PyEstimate)> {
    let seq = sequence(&space, rows)?;
    let b = seqnorms::mixed_norm(&seq, s, q, &config(restarts, seed, tol)).map_err(py_err)?;
    Ok((PyEstimate { inner: b.lower }, PyEstimate { inner: b.upper }))
}

/// Measure-form `(s, q)` norm of the rows.
#[pyfunction]
#[pyo3(signature = (space, rows, s, q, restarts = 32, seed = 0, tol = 1e-9))]
#[allow(clippy::too_many_arguments)]
fn maurey_norm(
    space: PyRef<'_, PySpace>,
    rows: Vec<Vec<f64>>,
    s: f64,
    q: f64,
    restarts: usize,
    seed: u64,
    tol: f64,
) -> PyResult<PyEstimate> {
    let seq = sequence(&space, rows)?;
    let inner = seqnorms::maurey_norm(&seq, s, q, &config(restarts, seed, tol)).map_err(py_err)?;
    Ok(PyEstimate { inner })
}

/// `(q; p)`-summing norm of `t` over families of `m` vectors.
#[pyfunction]
#[pyo3(signature = (t, q, p, m = 4, restarts = 32, seed = 0, tol = 1e-9))]
#[allow(clippy::too_many_arguments)]
fn pi_qp(
    t: PyRef<'_, PyOperator>,
    q: f64,
    p: f64,
    m: usize,
    restarts: usize,
    seed: u64,
    tol: f64,
) -> PyResult<PyOpEstimate> {
    let inner = opnorms::pi_qp(&t.inner, q, p, m, &config(restarts, seed, tol)).map_err(py_err)?;
    Ok(PyOpEstimate { inner })
}

/// Weakly anisotropic `(s, q, r; p)` norm of `t`.
#[pyfunction]
#[pyo3(signature = (t, s, q, r, p, m = 4, n = 4, restarts = 32, seed = 0, tol = 1e-9))]
#[allow(clippy::too_many_arguments)]
fn weakly_aniso_norm(
    t: PyRef<'_, PyOperator>,
    s: f64,
    q: f64,
    r: f64,
    p: f64,
    m: usize,
    n: usize,
    restarts: usize,
    seed: u64,
    tol: f64,
) -> PyResult<PyOpEstimate> {
    let inner =
        opnorms::weakly_aniso_norm(&t.inner, s, q, r, p, m, n, &config(restarts, seed, tol))
            .map_err(py_err)?;
    Ok(PyOpEstimate { inner })
}

/// Anisotropic `(p; s, q, r)`-summing norm of `t`.
#[pyfunction]
#[pyo3(signature = (t, p, s, q, r, m = 4, restarts = 32, seed = 0, tol = 1e-9))]
#[allow(clippy::too_many_arguments)]
fn aniso_summing_norm(
    t: PyRef<'_, PyOperator>,
    p: f64,
    s: f64,
    q: f64,
    r: f64,
    m: usize,
    restarts: usize,
    seed: u64,
    tol: f64,
) -> PyResult<PyOpEstimate> {
    let inner = opnorms::aniso_summing_norm(&t.inner, p, s, q, r, m, &config(restarts, seed, tol))
        .map_err(py_err)?;
    Ok(PyOpEstimate { inner })
}

/// Weak domination constant of `t` for the weakly anisotropic witness family
/// with `q = p`, on a grid of `grid` unit functionals and `tests` test vectors.
#[pyfunction]
#[pyo3(signature = (t, s, p, r, grid = 64, tests = 64, m = 4, n = 4, restarts = 32, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn domination_weak(
    t: PyRef<'_, PyOperator>,
    s: f64,
    p: f64,
    r: f64,
    grid: usize,
    tests: usize,
    m: usize,
    n: usize,
    restarts: usize,
    seed: u64,
) -> PyResult<PyDomination> {
    let t = &t.inner;
    let est = opnorms::weakly_aniso_norm(t, s, p, r, p, m, n, &config(restarts, seed, 1e-9))
        .map_err(py_err)?;
    let fam = est
        .witness_functionals
        .ok_or_else(|| NumericError::new_err("search returned no family"))?;
    let dual = pietsch::build_dual_grid(t.domain(), grid, seed).map_err(py_err)?;
    let tv = pietsch::standard_tests(t.domain(), tests, seed, &est.witness_vectors.rows());
    let opts = DominationOptions {
        seed,
        ..DominationOptions::default()
    };
    let inner =
        pietsch::domination_lp_weak(t, s, p, r, &dual, &[fam], &tv, &opts).map_err(py_err)?;
    Ok(PyDomination { inner })
}

/// Anisotropic domination constant of `t` on `grid` families of aggregate
/// `ℓ_r` norm 1 and `tests` test vectors.
#[pyfunction]
#[pyo3(signature = (t, p, s, r, grid = 64, tests = 64, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn domination_aniso(
    t: PyRef<'_, PyOperator>,
    p: f64,
    s: f64,
    r: f64,
    grid: usize,
    tests: usize,
    seed: u64,
) -> PyResult<PyDomination> {
    let t = &t.inner;
    let fams = pietsch::build_family_grid(t.domain(), r, grid, seed).map_err(py_err)?;
    let tv = pietsch::standard_tests(t.domain(), tests, seed, &[]);
    let opts = DominationOptions {
        seed,
        ..DominationOptions::default()
    };
    let inner = pietsch::domination_lp_aniso(t, p, s, r, &fams, &tv, &opts).map_err(py_err)?;
    Ok(PyDomination { inner })
}

/// Ids of the registered suite checks.
#[pyfunction]
fn check_ids() -> Vec<&'static str> {
    suite::check_ids()
}

/// Runs one suite check and returns its JSON report.
#[pyfunction]
#[pyo3(signature = (id, seed = 0, instances = None))]
fn run_check(py: Python<'_>, id: &str, seed: u64, instances: Option<usize>) -> PyResult<String> {
    let mut spec = CheckSpec::new(id, suite::check_seed(seed, id)).map_err(py_err)?;
    if let Some(n) = instances {
        spec.instances = n;
    }
    let report = py.detach(|| suite::run_check(&spec)).map_err(py_err)?;
    to_json(&report)
}

/// Runs the suite (all checks when `checks` is empty) and returns its JSON report.
#[pyfunction]
#[pyo3(signature = (seed = 0, checks = Vec::new()))]
fn run_suite(py: Python<'_>, seed: u64, checks: Vec<String>) -> PyResult<String> {
    let cfg = SuiteConfig {
        seed,
        checks,
        ..SuiteConfig::default()
    };
    let report = py.detach(|| suite::run_suite(&cfg)).map_err(py_err)?;
    to_json(&report)
}

#[pymodule]
fn pyanisum(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RegimeError", m.py().get_type::<RegimeError>())?;
    m.add("NumericError", m.py().get_type::<NumericError>())?;
    m.add_class::<PySpace>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyOpEstimate>()?;
    m.add_class::<PyDomination>()?;
    m.add_class::<PyOperator>()?;
    m.add_function(wrap_pyfunction!(strong_norm, m)?)?;
    m.add_function(wrap_pyfunction!(weak_norm, m)?)?;
    m.add_function(wrap_pyfunction!(aniso_norm, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_norm, m)?)?;
    m.add_function(wrap_pyfunction!(maurey_norm, m)?)?;
    m.add_function(wrap_pyfunction!(pi_qp, m)?)?;
    m.add_function(wrap_pyfunction!(weakly_aniso_norm, m)?)?;
    m.add_function(wrap_pyfunction!(aniso_summing_norm, m)?)?;
    m.add_function(wrap_pyfunction!(domination_weak, m)?)?;
    m.add_function(wrap_pyfunction!(domination_aniso, m)?)?;
    m.add_function(wrap_pyfunction!(check_ids, m)?)?;
    m.add_function(wrap_pyfunction!(run_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
