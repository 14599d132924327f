//! Python bindings. Structured results cross the boundary as JSON strings so
//! the Python side can use `json.loads` without mirrored classes.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use essmin::driver::{self, GreenSelector, RunConfig};
use essmin::greens;
use essmin::intpoly::IntPoly;
use essmin::lowerbound::{default_seed_grid, exchange_solve, ExchangeConfig, Rigor};
use essmin::measures::Measure;
use essmin::modular;
use essmin::upperbound::{self, SearchConfig};
use essmin::verify::{run_suite, Suite};
use essmin::{Complex64, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::NonConvergence { .. } | Error::ToleranceNotMet { .. } | Error::BudgetExhausted(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn selector(spec: &str) -> PyResult<GreenSelector> {
    if spec.trim_start().starts_with('{') {
        let s = greens::CompositeSpec::from_json(spec).map_err(py_err)?;
        Ok(GreenSelector::Composite(s))
    } else {
        GreenSelector::parse_arg(spec).map_err(py_err)
    }
}

fn parse_rigor(s: &str) -> PyResult<Rigor> {
    match s {
        "certified" => Ok(Rigor::Certified),
        "heuristic" => Ok(Rigor::Heuristic),
        _ => Err(PyValueError::new_err(format!("unknown rigor `{s}`"))),
    }
}

/// A Green function: a builtin name, a composite spec JSON string, or a path
/// to a spec file.
#[pyclass(name = "GreenFunction", frozen)]
struct PyGreen {
    inner: greens::GreenFunction,
    selector: GreenSelector,
}

#[pymethods]
impl PyGreen {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        let selector = selector(spec)?;
        let inner = selector.resolve().map_err(py_err)?;
        Ok(PyGreen { inner, selector })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    fn canonical_id(&self) -> String {
        self.inner.canonical_id()
    }

    fn spec_hash(&self) -> String {
        driver::spec_hash(&self.inner)
    }

    fn __call__(&self, z: Complex64) -> f64 {
        self.inner.eval(z)
    }

    fn __repr__(&self) -> String {
        format!("GreenFunction({:?})", self.inner.name())
    }
}

/// Integer polynomial in `x`.
#[pyclass(name = "IntPoly", frozen, eq)]
#[derive(PartialEq)]
struct PyPoly {
    inner: IntPoly,
}

#[pymethods]
impl PyPoly {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyPoly {
            inner: IntPoly::parse(text).map_err(py_err)?,
        })
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    /// Coefficients from the constant term up, as Python ints.
    fn coeffs(&self) -> Vec<String> {
        self.inner.to_decimal_strings()
    }

    fn is_irreducible(&self) -> PyResult<bool> {
        self.inner.is_irreducible_q().map_err(py_err)
    }

    fn resultant(&self, other: &PyPoly) -> String {
        self.inner.resultant(&other.inner).to_string()
    }

    fn roots(&self) -> PyResult<Vec<Complex64>> {
        Ok(self.inner.complex_roots().map_err(py_err)?.points())
    }

    fn __call__(&self, z: Complex64) -> Complex64 {
        self.inner.eval_complex(z)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("IntPoly({:?})", self.inner.to_string())
    }
}

/// `∫ g dμ` for an admissible measure given as JSON; returns the witness JSON.
#[pyfunction]
#[pyo3(signature = (green, measure_json, tol = 1e-8))]
fn eval_witness(green: &PyGreen, measure_json: &str, tol: f64) -> PyResult<String> {
    let m: Measure = serde_json::from_str(measure_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let w = upperbound::eval_witness(&green.inner, &m, tol).map_err(py_err)?;
    Ok(w.to_json())
}

/// Capacity-one upper bound from the lemniscate of a monic polynomial.
#[pyfunction]
#[pyo3(signature = (green, poly, tol = 1e-8))]
fn cap1_bound(green: &PyGreen, poly: &PyPoly, tol: f64) -> PyResult<f64> {
    Ok(upperbound::cap1_bound(&green.inner, &poly.inner, tol).map_err(py_err)?.value)
}

/// Best witness found within `budget` evaluations; returns the witness JSON or `None`.
#[pyfunction]
#[pyo3(signature = (green, budget = 200, max_degree = 6, max_height = 20))]
fn search(py: Python<'_>, green: &PyGreen, budget: usize, max_degree: usize, max_height: u64) -> PyResult<Option<String>> {
    let cfg = SearchConfig {
        max_degree,
        max_height,
        ..SearchConfig::default()
    };
    let g = green.inner.clone();
    let r = py.detach(move || upperbound::search(&g, &cfg, budget)).map_err(py_err)?;
    Ok(r.best.map(|w| w.to_json()))
}

/// Exchange over a fixed pool; returns the best certificate JSON.
#[pyfunction]
#[pyo3(signature = (green, pool, rigor = "certified", max_rounds = 20))]
fn exchange(py: Python<'_>, green: &PyGreen, pool: Vec<PyRef<'_, PyPoly>>, rigor: &str, max_rounds: usize) -> PyResult<String> {
    let pool: Vec<IntPoly> = pool.iter().map(|p| p.inner.clone()).collect();
    let cfg = ExchangeConfig {
        rigor: parse_rigor(rigor)?,
        max_rounds,
        ..ExchangeConfig::default()
    };
    let g = green.inner.clone();
    let out = py
        .detach(move || exchange_solve(&g, &pool, &default_seed_grid(), &cfg))
        .map_err(py_err)?;
    Ok(out.best.to_json())
}

/// Runs the bound loop and returns the report JSON and the exit code.
#[pyfunction]
#[pyo3(signature = (green, eps = 1e-3, budget_lp = 20, budget_witness = 10_000, budget_wall_s = 1800.0, rigor = "certified", out = None, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn run_bounds(
    py: Python<'_>,
    green: &PyGreen,
    eps: f64,
    budget_lp: usize,
    budget_witness: usize,
    budget_wall_s: f64,
    rigor: &str,
    out: Option<std::path::PathBuf>,
    seed: u64,
) -> PyResult<(String, i32)> {
    let cfg = RunConfig {
        eps,
        budget_lp,
        budget_witness,
        budget_wall_s,
        rigor: parse_rigor(rigor)?,
        out,
        seed,
        ..RunConfig::new(green.selector.clone())
    };
    let o = py.detach(move || driver::run(cfg)).map_err(py_err)?;
    Ok((driver::report_json(&o.ledger, o.halt), o.halt.exit_code()))
}

/// `τ` in the standard fundamental domain with `j(τ) = z`.
#[pyfunction]
fn inverse_j(z: Complex64) -> PyResult<Complex64> {
    Ok(modular::inverse_j(z).map_err(py_err)?.tau)
}

#[pyfunction]
fn g_hyp(z: Complex64) -> f64 {
    modular::g_hyp_eval(z)
}

/// `(name, passed, detail)` per check.
#[pyfunction]
#[pyo3(signature = (suite, seed = 0))]
fn verify(py: Python<'_>, suite: &str, seed: u64) -> PyResult<Vec<(String, bool, String)>> {
    let s: Suite = suite.parse().map_err(py_err)?;
    let checks = py.detach(move || run_suite(s, seed));
    Ok(checks.into_iter().map(|c| (c.name, c.passed, c.detail)).collect())
}

#[pymodule]
pub fn essmin_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGreen>()?;
    m.add_class::<PyPoly>()?;
    m.add("BUILTINS", greens::BUILTINS.to_vec())?;
    m.add_function(wrap_pyfunction!(eval_witness, m)?)?;
    m.add_function(wrap_pyfunction!(cap1_bound, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(exchange, m)?)?;
    m.add_function(wrap_pyfunction!(run_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_j, m)?)?;
    m.add_function(wrap_pyfunction!(g_hyp, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
