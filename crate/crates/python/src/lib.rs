//! Python bindings: chart instances and their checks, the profile ODE
//! tools and configuration runs. Structured results come back as plain
//! dicts and lists.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use qecheck::cli::{self, ConfigError, InstanceSpec, PotentialKind, PotentialSpec, RunConfig};
use qecheck::cohom1::{self, InitialData, ProfileAnsatz, DEFAULT_STEP};
use qecheck::error::Error;
use qecheck::geometry::{curvature, ChartInstance, MParam};
use qecheck::kahler::{kahler_checks, KahlerInstance};
use qecheck::quasi_einstein::{self as qe, Form, IdentityId};
use qecheck::sampling::{sample_box, DEFAULT_SEED};
use qecheck::warp;

create_exception!(qecheck_py, QecheckError, PyException);

fn engine(e: Error) -> PyErr {
    QecheckError::new_err(e.to_string())
}

fn config(e: ConfigError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse_m(obj: Option<&Bound<'_, PyAny>>) -> PyResult<MParam> {
    match obj {
        None => Ok(MParam::Infinite),
        Some(o) => from_py(o),
    }
}

/// A metric on a coordinate box, with optional potential and constants.
#[pyclass(name = "Instance", module = "qecheck_py", frozen)]
struct PyInstance {
    inner: ChartInstance,
    kahler: Option<KahlerInstance>,
}

#[pymethods]
impl PyInstance {
    /// `potential` is `("F" | "U", expression)`; `m` a positive number or
    /// `"inf"`.
    #[new]
    #[pyo3(signature = (coordinates, r#box, metric, potential=None, m=None, lambda_=0.0, params=None, periodic=None, complex_structure=None, label=String::new()))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        coordinates: Vec<String>,
        r#box: Vec<[f64; 2]>,
        metric: Vec<String>,
        potential: Option<(String, String)>,
        m: Option<&Bound<'_, PyAny>>,
        lambda_: f64,
        params: Option<BTreeMap<String, f64>>,
        periodic: Option<Vec<bool>>,
        complex_structure: Option<Vec<String>>,
        label: String,
    ) -> PyResult<Self> {
        let potential = match potential {
            None => None,
            Some((kind, expr)) => {
                let kind = match kind.as_str() {
                    "F" | "f" => PotentialKind::F,
                    "U" | "u" => PotentialKind::U,
                    other => return Err(PyValueError::new_err(format!("potential kind must be F or U, got {}", other))),
                };
                Some(PotentialSpec { kind, expr })
            }
        };
        let spec = InstanceSpec {
            coordinates,
            bounds: r#box,
            periodic: periodic.unwrap_or_default(),
            metric,
            potential,
            m: parse_m(m)?,
            lambda: lambda_,
            params: params.unwrap_or_default(),
            complex_structure,
        };
        let cfg = RunConfig {
            label,
            instance: spec,
            checks: Vec::new(),
            sample: Default::default(),
            output: Default::default(),
        };
        let (inner, kahler) = cli::instantiate(&cfg).map_err(config)?;
        Ok(PyInstance { inner, kahler })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn coordinates(&self) -> Vec<String> {
        self.inner.coordinates().to_vec()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda()
    }

    /// Seeded points drawn uniformly from the coordinate box.
    #[pyo3(signature = (count=100, seed=DEFAULT_SEED))]
    fn sample(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        sample_box(self.inner.chart().bounds(), count, seed)
    }

    /// Riemann, Ricci and scalar curvature at a point.
    fn curvature<'py>(&self, py: Python<'py>, point: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &curvature(&self.inner, &point).map_err(engine)?)
    }

    fn scalar_curvature(&self, point: Vec<f64>) -> PyResult<f64> {
        Ok(curvature(&self.inner, &point).map_err(engine)?.scalar)
    }

    /// Row-major residual of the quasi-Einstein equation; `form` is "F" or "U".
    #[pyo3(signature = (point, form="F"))]
    fn qe_residual(&self, point: Vec<f64>, form: &str) -> PyResult<Vec<f64>> {
        let form = match form {
            "F" => Form::F,
            "U" => Form::U,
            other => return Err(PyValueError::new_err(format!("form must be F or U, got {}", other))),
        };
        Ok(qe::qe_residual(&self.inner, &point, form).map_err(engine)?.data)
    }

    fn check_identity<'py>(
        &self,
        py: Python<'py>,
        name: &str,
        points: Vec<Vec<f64>>,
        tol: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let id: IdentityId = name.parse().map_err(PyValueError::new_err)?;
        to_py(py, &qe::check_identity(&self.inner, id, &points, tol).map_err(engine)?)
    }

    fn mu_constancy<'py>(&self, py: Python<'py>, points: Vec<Vec<f64>>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &qe::mu_constancy(&self.inner, &points, tol).map_err(engine)?)
    }

    fn scalar_bound<'py>(&self, py: Python<'py>, points: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &qe::scalar_bound_report(&self.inner, &points).map_err(engine)?)
    }

    fn einstein<'py>(
        &self,
        py: Python<'py>,
        lambda_: f64,
        points: Vec<Vec<f64>>,
        tol: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &warp::einstein_check(&self.inner, lambda_, &points, tol).map_err(engine)?)
    }

    /// The warped product `g + u² g_F` over this base.
    fn warp_lift(&self) -> PyResult<PyInstance> {
        let w = warp::lift_warped_product(&self.inner).map_err(engine)?;
        Ok(PyInstance { inner: w.total, kahler: None })
    }

    /// Compatibility of the declared complex structure.
    fn kahler<'py>(&self, py: Python<'py>, points: Vec<Vec<f64>>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let k = self
            .kahler
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("instance has no complex structure"))?;
        to_py(py, &kahler_checks(k, &points, tol).map_err(engine)?)
    }

    fn __repr__(&self) -> String {
        format!("Instance(label={:?}, dim={}, lambda={})", self.inner.label(), self.inner.dim(), self.inner.lambda())
    }
}

/// Run a JSON configuration and return the report.
#[pyfunction]
fn run<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = cli::parse_config(config_json).map_err(config)?;
    to_py(py, &cli::run(&cfg).map_err(config)?)
}

#[pyfunction]
fn catalog_names() -> Vec<&'static str> {
    cli::catalog_names()
}

/// JSON text of a built-in fixture.
#[pyfunction]
fn catalog_config(name: &str) -> PyResult<&'static str> {
    Ok(cli::catalog(name).map_err(config)?.0.source)
}

/// Integrate a profile ODE. `ansatz` and `init` are dicts, e.g.
/// `{"kind": "LINE", "n": 1, "m": 2, "lambda": -2, "rho": 0, "form": "U"}`.
#[pyfunction]
#[pyo3(signature = (ansatz, init, r_max, h=DEFAULT_STEP))]
fn solve_ode<'py>(
    py: Python<'py>,
    ansatz: &Bound<'py, PyAny>,
    init: &Bound<'py, PyAny>,
    r_max: f64,
    h: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let a: ProfileAnsatz = from_py(ansatz)?;
    let i: InitialData = from_py(init)?;
    to_py(py, &cohom1::integrate_ode(&a, &i, r_max, h).map_err(engine)?)
}

/// Integrate a profile ODE and rebuild the metric from the solution.
#[pyfunction]
#[pyo3(signature = (ansatz, init, r_max, h=DEFAULT_STEP))]
fn lift_ode(ansatz: &Bound<'_, PyAny>, init: &Bound<'_, PyAny>, r_max: f64, h: f64) -> PyResult<PyInstance> {
    let a: ProfileAnsatz = from_py(ansatz)?;
    let i: InitialData = from_py(init)?;
    let sol = cohom1::integrate_ode(&a, &i, r_max, h).map_err(engine)?;
    Ok(PyInstance { inner: cohom1::lift_solution(&sol).map_err(engine)?, kahler: None })
}

/// Closed-surface shooting scan over `f''(0)` in `[lo, hi]`.
#[pyfunction]
#[pyo3(signature = (m, lambda_, lo=-1.0, hi=1.0, samples=41))]
fn shoot_closed_surface<'py>(
    py: Python<'py>,
    m: f64,
    lambda_: f64,
    lo: f64,
    hi: f64,
    samples: usize,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &cohom1::shoot_closed_surface(m, lambda_, (lo, hi), samples))
}

#[pyfunction]
fn exponential_solution_check<'py>(
    py: Python<'py>,
    n: usize,
    m: f64,
    mu: f64,
    points: Vec<Vec<f64>>,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &cohom1::exponential_solution_check(n, m, mu, &points, tol).map_err(engine)?)
}

#[pyfunction]
#[pyo3(signature = (bounds, count, seed=DEFAULT_SEED))]
fn sample(bounds: Vec<(f64, f64)>, count: usize, seed: u64) -> Vec<Vec<f64>> {
    sample_box(&bounds, count, seed)
}

#[pymodule]
fn qecheck_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QecheckError", m.py().get_type::<QecheckError>())?;
    m.add("ENGINE_VERSION", cli::ENGINE_VERSION)?;
    m.add("DEFAULT_SEED", DEFAULT_SEED)?;
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_names, m)?)?;
    m.add_function(wrap_pyfunction!(catalog_config, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ode, m)?)?;
    m.add_function(wrap_pyfunction!(lift_ode, m)?)?;
    m.add_function(wrap_pyfunction!(shoot_closed_surface, m)?)?;
    m.add_function(wrap_pyfunction!(exponential_solution_check, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    Ok(())
}
