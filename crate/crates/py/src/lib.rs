//! Python bindings.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tropicalimit::arch;
use tropicalimit::scenario::{Problem, Scenario};
use tropicalimit::tseries::{self, TermRecord};
use tropicalimit::verifier;
use tropicalimit::Error;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Parse(_) | Error::Validation(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, s: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (s,))
}

fn problem(scenario: &str) -> PyResult<Problem> {
    let text = match scenario.strip_prefix("builtin:") {
        Some(name) => verifier::builtin(name).ok_or_else(|| PyValueError::new_err(format!("unknown built-in scenario {name:?}")))?,
        None => scenario,
    };
    Scenario::from_json(text).and_then(|s| s.validate()).map_err(to_py_err)
}

/// A truncated series in `t` and `λ = -log|t|`.
#[pyclass(name = "TSeries", module = "tropicalimit", frozen)]
struct PyTSeries(tseries::TSeries);

#[pymethods]
impl PyTSeries {
    /// From `(re, im, t_order, log_power)` tuples; `t_order` is a rational string.
    #[new]
    #[pyo3(signature = (terms = Vec::new()))]
    fn new(terms: Vec<(f64, f64, String, i32)>) -> PyResult<Self> {
        let records: Vec<TermRecord> = terms
            .into_iter()
            .map(|(re, im, t_order, log_power)| TermRecord { re, im, t_order, log_power })
            .collect();
        tseries::TSeries::from_records(&records).map(PyTSeries).map_err(to_py_err)
    }

    #[staticmethod]
    fn t() -> Self {
        PyTSeries(tseries::TSeries::t())
    }

    #[staticmethod]
    fn lam() -> Self {
        PyTSeries(tseries::TSeries::lambda())
    }

    fn __add__(&self, other: &Self) -> Self {
        PyTSeries(&self.0 + &other.0)
    }

    fn __sub__(&self, other: &Self) -> Self {
        PyTSeries(&self.0 - &other.0)
    }

    fn __mul__(&self, other: &Self) -> Self {
        PyTSeries(&self.0 * &other.0)
    }

    fn __neg__(&self) -> Self {
        PyTSeries(-&self.0)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("TSeries({})", self.0)
    }

    fn invert(&self) -> PyResult<Self> {
        self.0.invert().map(PyTSeries).map_err(to_py_err)
    }

    fn classify(&self) -> String {
        serde_json::to_value(self.0.classify())
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    }

    fn std(&self) -> PyResult<Complex64> {
        self.0.std().map_err(to_py_err)
    }

    /// As a `"p/q"` string.
    fn log_norm(&self) -> PyResult<String> {
        self.0.log_norm().map(|q| q.to_string()).map_err(to_py_err)
    }

    fn sample(&self, t: Complex64) -> Complex64 {
        self.0.sample(t)
    }

    fn records(&self) -> Vec<(f64, f64, String, i32)> {
        self.0.to_records().into_iter().map(|r| (r.re, r.im, r.t_order, r.log_power)).collect()
    }
}

/// JSON text of a built-in scenario.
#[pyfunction]
fn builtin_scenario(name: &str) -> PyResult<&'static str> {
    verifier::builtin(name).ok_or_else(|| PyValueError::new_err(format!("unknown built-in scenario {name:?}")))
}

/// Full convergence run; `scenario` is JSON text or `builtin:<name>`.
#[pyfunction]
fn run_scenario<'py>(py: Python<'py>, scenario: &str) -> PyResult<Bound<'py, PyAny>> {
    let p = problem(scenario)?;
    let report = py.detach(|| verifier::run(&p)).map_err(to_py_err)?;
    let mut v = serde_json::to_value(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    v["passed"] = report.passed().into();
    json_to_py(py, &v.to_string())
}

/// Non-archimedean integral at the first scheduled `t`.
#[pyfunction]
fn na_integral(py: Python<'_>, scenario: &str) -> PyResult<f64> {
    let p = problem(scenario)?;
    py.detach(|| verifier::run_na(&p, p.ts[0])).map(|r| r.value).map_err(to_py_err)
}

/// Archimedean integral at `t` over the smallest `ε`.
#[pyfunction]
fn arch_integral<'py>(py: Python<'py>, scenario: &str, t: Complex64) -> PyResult<Bound<'py, PyDict>> {
    let p = problem(scenario)?;
    let r = py.detach(|| verifier::run_arch(&p, t)).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("value", r.value)?;
    d.set_item("abs_value", r.abs_value)?;
    d.set_item("est_error", r.est_error)?;
    d.set_item("nodes_used", r.nodes_used)?;
    d.set_item("nodes_skipped", r.nodes_skipped)?;
    d.set_item("bound", verifier::bound_for(&p.chart, &r))?;
    Ok(d)
}

#[pyfunction]
fn a_priori_bound(m: usize, n: usize, sup_phi: f64, d: f64, a: f64) -> f64 {
    arch::a_priori_bound(m, n, sup_phi, d, a)
}

#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn selftest(py: Python<'_>, seed: u64) -> bool {
    py.detach(|| verifier::selftest(seed, false).passed)
}

#[pymodule]
#[pyo3(name = "tropicalimit")]
fn tropicalimit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTSeries>()?;
    m.add_function(wrap_pyfunction!(builtin_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(na_integral, m)?)?;
    m.add_function(wrap_pyfunction!(arch_integral, m)?)?;
    m.add_function(wrap_pyfunction!(a_priori_bound, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    m.add("BUILTIN_SCENARIOS", verifier::BUILTIN_NAMES.to_vec())?;
    Ok(())
}
