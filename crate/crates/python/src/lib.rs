//! Python bindings. Results that are records on the Rust side come back as
//! plain dicts and lists.

use ::normgeo::bilinear::{self, NormMethod, NormOptions, ATTAINMENT_TOL, CLUSTER_RADIUS, OPERATOR_TOL};
use ::normgeo::orthogonality::{self as ortho, DEFAULT_TOL};
use ::normgeo::{derivatives, oracle, BilinearOp, Error, SpaceSpec};
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Numeric { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::Internal(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn record<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &v)
}

/// A finite-dimensional normed space: `lp`, an ℓ1-sum or a max-product.
#[pyclass(name = "Space", module = "normgeo", frozen, eq)]
#[derive(PartialEq)]
struct PySpace(SpaceSpec);

#[pymethods]
impl PySpace {
    /// Parses the JSON schema or the compact `lp:<p>:<n>`.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        spec.parse().map(PySpace).map_err(py_err)
    }

    #[staticmethod]
    fn lp(p: f64, n: usize) -> PyResult<Self> {
        SpaceSpec::lp(p, n).map(PySpace).map_err(py_err)
    }

    #[staticmethod]
    fn sum_l1(left: &PySpace, right: &PySpace) -> Self {
        PySpace(SpaceSpec::sum_l1(left.0.clone(), right.0.clone()))
    }

    #[staticmethod]
    fn product_max(left: &PySpace, right: &PySpace) -> Self {
        PySpace(SpaceSpec::product_max(left.0.clone(), right.0.clone()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn norm(&self, v: Vec<f64>) -> PyResult<f64> {
        self.0.check(&v).map_err(py_err)?;
        Ok(self.0.norm_of(&v))
    }

    fn dual_norm(&self, g: Vec<f64>) -> PyResult<f64> {
        self.0.check(&g).map_err(py_err)?;
        Ok(self.0.dual_norm_of(&g))
    }

    fn supporting_functional(&self, v: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.check(&v).map_err(py_err)?;
        Ok(self.0.supporting_functional(&v))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("serializable space")
    }

    fn __repr__(&self) -> String {
        format!("Space('{}')", self.0)
    }
}

/// Bilinear map `T : X × Y → Z`, `T(x, y)_k = Σ c[k][i][j] x_i y_j`.
#[pyclass(name = "BilinearOp", module = "normgeo", frozen)]
struct PyBilinear(BilinearOp);

fn options(seed: u64, restarts: usize) -> NormOptions {
    NormOptions {
        seed,
        restarts: restarts.max(1),
        ..NormOptions::default()
    }
}

#[pymethods]
impl PyBilinear {
    #[new]
    fn new(x: &PySpace, y: &PySpace, z: &PySpace, coeffs: Vec<f64>) -> PyResult<Self> {
        BilinearOp::from_flat(x.0.clone(), y.0.clone(), z.0.clone(), coeffs)
            .map(PyBilinear)
            .map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(PyBilinear)
            .map_err(|e| PyValueError::new_err(format!("bad tensor JSON: {e}")))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("serializable tensor")
    }

    fn apply(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.apply(&x, &y).map_err(py_err)
    }

    /// `{"value", "pair": {"x", "y"}, ...}`; `method` is alternating,
    /// multistart or grid.
    #[pyo3(signature = (method = "alternating", seed = 0, restarts = bilinear::DEFAULT_RESTARTS))]
    fn norm<'py>(&self, py: Python<'py>, method: &str, seed: u64, restarts: usize) -> PyResult<Bound<'py, PyAny>> {
        let method = match method {
            "alternating" => NormMethod::Alternating,
            "multistart" => NormMethod::Multistart,
            "grid" => NormMethod::Grid,
            other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
        };
        let opts = NormOptions { method, ..options(seed, restarts) };
        record(py, &bilinear::operator_norm(&self.0, &opts).map_err(py_err)?)
    }

    #[pyo3(signature = (seed = 0, restarts = bilinear::DEFAULT_RESTARTS))]
    fn attainment_set<'py>(&self, py: Python<'py>, seed: u64, restarts: usize) -> PyResult<Bound<'py, PyAny>> {
        let set = bilinear::attainment_set(&self.0, &options(seed, restarts), ATTAINMENT_TOL, CLUSTER_RADIUS)
            .map_err(py_err)?;
        record(py, &set)
    }

    /// `T ⊥_B A`, or `T ⊥_B^ε A` when `eps` is given.
    #[pyo3(signature = (other, eps = None, tol = OPERATOR_TOL, seed = 0, restarts = bilinear::DEFAULT_RESTARTS))]
    fn is_orthogonal_to<'py>(
        &self,
        py: Python<'py>,
        other: &PyBilinear,
        eps: Option<f64>,
        tol: f64,
        seed: u64,
        restarts: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let opts = options(seed, restarts);
        match eps {
            Some(e) => record(py, &bilinear::is_operator_approx_birkhoff(&self.0, &other.0, e, &opts, tol).map_err(py_err)?),
            None => record(py, &bilinear::is_operator_birkhoff(&self.0, &other.0, &opts, tol).map_err(py_err)?),
        }
    }

    #[pyo3(signature = (seed = 0, restarts = bilinear::DEFAULT_RESTARTS))]
    fn smoothness<'py>(&self, py: Python<'py>, seed: u64, restarts: usize) -> PyResult<Bound<'py, PyAny>> {
        record(py, &bilinear::is_operator_smooth(&self.0, &options(seed, restarts)).map_err(py_err)?)
    }
}

/// `{"rho_plus", "rho_minus", "method"}`; `method` is auto, closed or numeric.
#[pyfunction]
#[pyo3(signature = (space, x, y, method = "auto"))]
fn rho<'py>(py: Python<'py>, space: &PySpace, x: Vec<f64>, y: Vec<f64>, method: &str) -> PyResult<Bound<'py, PyAny>> {
    let r = match method {
        "auto" => derivatives::rho(&space.0, &x, &y),
        "closed" => derivatives::rho_closed(&space.0, &x, &y),
        "numeric" => derivatives::rho_numeric(&space.0, &x, &y),
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}"))),
    };
    record(py, &r.map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (space, x, y, tol = DEFAULT_TOL))]
fn is_birkhoff(space: &PySpace, x: Vec<f64>, y: Vec<f64>, tol: f64) -> PyResult<bool> {
    Ok(ortho::is_birkhoff(&space.0, &x, &y, tol).map_err(py_err)?.holds)
}

#[pyfunction]
fn is_strong_birkhoff(space: &PySpace, x: Vec<f64>, y: Vec<f64>) -> PyResult<bool> {
    Ok(ortho::is_strong_birkhoff(&space.0, &x, &y).map_err(py_err)?.holds)
}

#[pyfunction]
#[pyo3(signature = (space, x, y, eps, tol = DEFAULT_TOL))]
fn is_approx_birkhoff(space: &PySpace, x: Vec<f64>, y: Vec<f64>, eps: f64, tol: f64) -> PyResult<bool> {
    Ok(ortho::is_approx_birkhoff(&space.0, &x, &y, eps, tol).map_err(py_err)?.holds)
}

#[pyfunction]
fn is_b_star(space: &PySpace, x: Vec<f64>, y: Vec<f64>) -> PyResult<bool> {
    Ok(ortho::is_b_star(&space.0, &x, &y).map_err(py_err)?.holds)
}

#[pyfunction]
fn check_james(space: &PySpace, x: Vec<f64>, y: Vec<f64>) -> PyResult<bool> {
    ortho::check_james(&space.0, &x, &y).map_err(py_err)
}

#[pyfunction]
fn support_set<'py>(py: Python<'py>, space: &PySpace, x: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    record(py, &ortho::support_set(&space.0, &x).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (space, x, y, resolution = 720))]
fn orthogonality_cone<'py>(
    py: Python<'py>,
    space: &PySpace,
    x: Vec<f64>,
    y: Vec<f64>,
    resolution: usize,
) -> PyResult<Bound<'py, PyAny>> {
    record(py, &ortho::orthogonality_cone(&space.0, &x, &y, resolution).map_err(py_err)?)
}

/// Runs one registered suite; `trials` defaults to the suite's own count.
/// Releases the GIL while the trials run.
#[pyfunction]
#[pyo3(signature = (theorem_id, trials = None, seed = 0))]
fn verify<'py>(py: Python<'py>, theorem_id: &str, trials: Option<usize>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let info = oracle::theorem_info(theorem_id)
        .ok_or_else(|| PyValueError::new_err(format!("unknown theorem id {theorem_id:?}")))?;
    let trials = trials.unwrap_or_else(|| info.default_trials());
    let report = py
        .detach(|| oracle::verify_theorem(info.id, trials, seed))
        .map_err(py_err)?;
    record(py, &report)
}

#[pyfunction]
fn list_theorems() -> Vec<&'static str> {
    oracle::THEOREMS.iter().map(|t| t.id).collect()
}

#[pymodule]
fn normgeo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpace>()?;
    m.add_class::<PyBilinear>()?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(is_birkhoff, m)?)?;
    m.add_function(wrap_pyfunction!(is_strong_birkhoff, m)?)?;
    m.add_function(wrap_pyfunction!(is_approx_birkhoff, m)?)?;
    m.add_function(wrap_pyfunction!(is_b_star, m)?)?;
    m.add_function(wrap_pyfunction!(check_james, m)?)?;
    m.add_function(wrap_pyfunction!(support_set, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonality_cone, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(list_theorems, m)?)?;
    Ok(())
}
