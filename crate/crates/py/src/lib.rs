//! Python bindings. Reports cross the boundary as JSON and come back as plain
//! dicts and lists, so they match the CLI output field for field.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use monostab_core::analysis::{iterate_map, probe_unique_fixed_point, IterateOptions};
use monostab_core::certificate::{certify as certify_core, CertifyOptions, Route};
use monostab_core::model::presets;
use monostab_core::montecarlo::{
    convergence_report, coupling_test, crossing_probability, simulate_many, tightness_diagnostic, ConvergenceOptions,
    Metric, DEFAULT_BURN_IN, DEFAULT_RADII, DEFAULT_STATIONARY_SAMPLES,
};
use monostab_core::{ShockVector, StateVector, Streams, TransitionMap, TransitionModel};

const DEFAULT_SEED: u64 = 42;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize + ?Sized>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// A validated builtin model.
#[pyclass(module = "monostab", frozen)]
struct Model {
    inner: TransitionModel,
}

impl Model {
    fn state(&self, coords: Vec<f64>) -> PyResult<StateVector> {
        let x = StateVector::new(coords).map_err(err)?;
        if x.dim() != self.inner.state_dim() {
            return Err(err(format!("expected a state of dimension {}, got {}", self.inner.state_dim(), x.dim())));
        }
        Ok(x)
    }

    fn states(&self, points: Option<Vec<Vec<f64>>>) -> PyResult<Vec<StateVector>> {
        match points {
            Some(p) => p.into_iter().map(|c| self.state(c)).collect(),
            None => Ok(self.inner.default_test_points()),
        }
    }

    fn shock(&self, coords: Vec<f64>) -> PyResult<ShockVector> {
        let v = ShockVector::new(coords).map_err(err)?;
        if v.dim() != self.inner.shock_dim() {
            return Err(err(format!("expected a shock of dimension {}, got {}", self.inner.shock_dim(), v.dim())));
        }
        Ok(v)
    }

    fn ordered_pair(&self, x_low: Option<Vec<f64>>, x_high: Option<Vec<f64>>) -> PyResult<(StateVector, StateVector)> {
        let defaults = self.inner.default_test_points();
        let lo = x_low.map(|c| self.state(c)).transpose()?.unwrap_or_else(|| defaults[0].clone());
        let hi = x_high.map(|c| self.state(c)).transpose()?.unwrap_or_else(|| defaults[defaults.len() - 1].clone());
        Ok((lo, hi))
    }
}

#[pymethods]
impl Model {
    /// Build a model from a JSON config string.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        TransitionModel::from_json_str(text).map(|inner| Model { inner }).map_err(err)
    }

    /// The reference configuration of a builtin family.
    #[staticmethod]
    fn builtin(family: &str) -> PyResult<Self> {
        let cfg = presets::by_name(family).ok_or_else(|| err(format!("unknown family `{family}`")))?;
        TransitionModel::from_config(&cfg).map(|inner| Model { inner }).map_err(err)
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family_name()
    }

    #[getter]
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    #[getter]
    fn shock_dim(&self) -> usize {
        self.inner.shock_dim()
    }

    /// `w(x, v)`.
    fn apply(&self, x: Vec<f64>, v: Vec<f64>) -> PyResult<Vec<f64>> {
        let out = self.inner.apply(&self.state(x)?, &self.shock(v)?).map_err(err)?;
        Ok(out.into_inner())
    }

    /// `(v_hi, v_lo)` used when no pair is given.
    fn default_pair(&self) -> (Vec<f64>, Vec<f64>) {
        let (hi, lo) = self.inner.default_pair();
        (hi.coords().to_vec(), lo.coords().to_vec())
    }

    fn metadata(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, self.inner.metadata())
    }

    fn config(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.config())
    }

    /// SHA-256 of the canonical config.
    fn config_hash(&self) -> String {
        self.inner.config().hash()
    }

    fn __repr__(&self) -> String {
        format!("Model(family={:?}, state_dim={})", self.inner.family_name(), self.inner.state_dim())
    }
}

/// Iterate `x -> w(x, v)` from `x0` to a fixed point.
#[pyfunction]
#[pyo3(signature = (model, v, x0, tol=None, max_iter=None))]
fn iterate(
    py: Python<'_>,
    model: &Model,
    v: Vec<f64>,
    x0: Vec<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let d = IterateOptions::default();
    let opts = IterateOptions { tol: tol.unwrap_or(d.tol), max_iter: max_iter.unwrap_or(d.max_iter), ..d };
    let res = iterate_map(&model.inner, &model.shock(v)?, &model.state(x0)?, opts).map_err(err)?;
    to_py(py, &res)
}

/// Uniqueness verdict for the fixed point of `w(., v)` from several starts.
#[pyfunction]
#[pyo3(signature = (model, v, starts=None))]
fn probe_uniqueness(py: Python<'_>, model: &Model, v: Vec<f64>, starts: Option<Vec<Vec<f64>>>) -> PyResult<Py<PyAny>> {
    let verdict =
        probe_unique_fixed_point(&model.inner, &model.shock(v)?, &model.states(starts)?, IterateOptions::default());
    to_py(py, &verdict)
}

/// Run the full certification and return the stability report.
///
/// `route` is one of `direct`, `contraction`, `concave` (needs `a` and `b`) or
/// `compact`. The pair defaults to the model's default pair.
#[pyfunction]
#[pyo3(signature = (model, v_hi=None, v_lo=None, route="direct", a=None, b=None, test_points=None, seed=DEFAULT_SEED, workers=None))]
#[allow(clippy::too_many_arguments)]
fn certify(
    py: Python<'_>,
    model: &Model,
    v_hi: Option<Vec<f64>>,
    v_lo: Option<Vec<f64>>,
    route: &str,
    a: Option<Vec<f64>>,
    b: Option<Vec<f64>>,
    test_points: Option<Vec<Vec<f64>>>,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let (d_hi, d_lo) = model.inner.default_pair().clone();
    let v_hi = v_hi.map(|c| model.shock(c)).transpose()?.unwrap_or(d_hi);
    let v_lo = v_lo.map(|c| model.shock(c)).transpose()?.unwrap_or(d_lo);
    let route = match route {
        "direct" => Route::Direct,
        "contraction" => Route::Contraction,
        "compact" => Route::Compact,
        "concave" => match (a, b) {
            (Some(a), Some(b)) => Route::Concave { a: model.state(a)?, b: model.state(b)? },
            _ => return Err(err("the concave route needs `a` and `b`")),
        },
        other => return Err(err(format!("unknown route `{other}`"))),
    };
    let points = match test_points {
        Some(p) => p.into_iter().map(|c| model.state(c)).collect::<PyResult<Vec<_>>>()?,
        None => Vec::new(),
    };
    let opts = CertifyOptions { workers, ..CertifyOptions::default() };
    let report = certify_core(&model.inner, &v_hi, &v_lo, &route, &points, seed, &opts).map_err(err)?;
    to_py(py, &report)
}

/// `reps` trajectories from `x0`, each a list of `horizon + 1` states.
#[pyfunction]
#[pyo3(signature = (model, x0, horizon, reps=1, seed=DEFAULT_SEED, workers=None))]
fn simulate(
    model: &Model,
    x0: Vec<f64>,
    horizon: usize,
    reps: usize,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<Vec<Vec<Vec<f64>>>> {
    let trajs =
        simulate_many(&model.inner, &model.state(x0)?, horizon, reps, &Streams::new(seed), workers).map_err(err)?;
    Ok(trajs.into_iter().map(|t| t.states.into_iter().map(StateVector::into_inner).collect()).collect())
}

/// Shared-shock coupling from ordered starts.
#[pyfunction]
#[pyo3(signature = (model, x_low=None, x_high=None, horizon=100, reps=1000, seed=DEFAULT_SEED, workers=None))]
#[allow(clippy::too_many_arguments)]
fn coupling(
    py: Python<'_>,
    model: &Model,
    x_low: Option<Vec<f64>>,
    x_high: Option<Vec<f64>>,
    horizon: usize,
    reps: usize,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let (lo, hi) = model.ordered_pair(x_low, x_high)?;
    let rep = coupling_test(&model.inner, &lo, &hi, horizon, reps, &Streams::new(seed), workers).map_err(err)?;
    to_py(py, &rep)
}

/// Estimate `P(X_m from x_high <= X_m from x_low)` with independent chains.
#[pyfunction]
#[pyo3(signature = (model, x_high, x_low, m, reps=100_000, seed=DEFAULT_SEED, workers=None))]
#[allow(clippy::too_many_arguments)]
fn crossing(
    py: Python<'_>,
    model: &Model,
    x_high: Vec<f64>,
    x_low: Vec<f64>,
    m: usize,
    reps: usize,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let est = crossing_probability(
        &model.inner,
        &model.state(x_high)?,
        &model.state(x_low)?,
        m,
        reps,
        &Streams::new(seed),
        workers,
    )
    .map_err(err)?;
    to_py(py, &est)
}

/// Pairwise marginal distances between long runs from several starts.
#[pyfunction]
#[pyo3(signature = (model, starts=None, burn_in=DEFAULT_BURN_IN, samples=DEFAULT_STATIONARY_SAMPLES, thinning=1, metric="ks", threshold=0.05, seed=DEFAULT_SEED, workers=None))]
#[allow(clippy::too_many_arguments)]
fn convergence(
    py: Python<'_>,
    model: &Model,
    starts: Option<Vec<Vec<f64>>>,
    burn_in: usize,
    samples: usize,
    thinning: usize,
    metric: &str,
    threshold: f64,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let metric: Metric = metric.parse().map_err(err)?;
    let opts = ConvergenceOptions { burn_in, n_samples: samples, thinning, metric, threshold };
    let rep =
        convergence_report(&model.inner, &model.states(starts)?, opts, &Streams::new(seed), workers).map_err(err)?;
    to_py(py, &rep)
}

/// Mass outside growing balls along simulated paths.
#[pyfunction]
#[pyo3(signature = (model, starts=None, horizon=200, reps=2000, radii=None, seed=DEFAULT_SEED, workers=None))]
#[allow(clippy::too_many_arguments)]
fn tightness(
    py: Python<'_>,
    model: &Model,
    starts: Option<Vec<Vec<f64>>>,
    horizon: usize,
    reps: usize,
    radii: Option<Vec<f64>>,
    seed: u64,
    workers: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let radii = radii.unwrap_or_else(|| DEFAULT_RADII.to_vec());
    let rep =
        tightness_diagnostic(&model.inner, &model.states(starts)?, horizon, reps, &radii, &Streams::new(seed), workers)
            .map_err(err)?;
    to_py(py, &rep)
}

/// Builtin family names.
#[pyfunction]
fn families() -> Vec<&'static str> {
    presets::all().iter().map(|c| c.family.name()).collect()
}

#[pymodule]
fn monostab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(iterate, m)?)?;
    m.add_function(wrap_pyfunction!(probe_uniqueness, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(coupling, m)?)?;
    m.add_function(wrap_pyfunction!(crossing, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    m.add_function(wrap_pyfunction!(tightness, m)?)?;
    m.add_function(wrap_pyfunction!(families, m)?)?;
    Ok(())
}
