//! Python bindings: time series, hyperparameters, the MASA run, synthetic
//! data and evaluation.

use std::path::PathBuf;

use masa::commands::{cmd_run, RunConfig};
use masa::driver::{baseline_assignment, run_masa, MasaResult};
use masa::io::{ingest_csv, write_run_outputs, MotifsFile};
use masa::metrics::evaluate as evaluate_labels;
use masa::synth::{gen_synthetic, SynthConfig, MOTIF_STATES};
use masa::timeseries::{Hyperparameters, LengthSort, TimeSeries};
use masa::MasaError;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn to_py_err(e: MasaError) -> PyErr {
    match e {
        MasaError::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_u64() {
            Some(u) => u.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

#[pyclass(name = "TimeSeries", module = "pymasa", frozen)]
struct PyTimeSeries {
    inner: TimeSeries,
}

#[pymethods]
impl PyTimeSeries {
    /// Builds a series from a list of equal-length rows.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: TimeSeries::from_rows(&rows).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (path, standardize = false))]
    fn from_csv(path: PathBuf, standardize: bool) -> PyResult<Self> {
        Ok(Self {
            inner: ingest_csv(&path, standardize).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn t_len(&self) -> usize {
        self.inner.t_len()
    }

    #[getter]
    fn n_dims(&self) -> usize {
        self.inner.n_dims()
    }

    #[getter]
    fn column_names(&self) -> Option<Vec<String>> {
        self.inner.column_names().map(<[String]>::to_vec)
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(<[f64]>::to_vec).collect()
    }

    /// Returns a column-wise z-scored copy.
    fn standardized(&self) -> Self {
        let mut inner = self.inner.clone();
        inner.standardize();
        Self { inner }
    }

    fn __len__(&self) -> usize {
        self.inner.t_len()
    }

    fn __repr__(&self) -> String {
        format!("TimeSeries(t_len={}, n_dims={})", self.inner.t_len(), self.inner.n_dims())
    }
}

#[pyclass(name = "Hyperparameters", module = "pymasa", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct PyHyperparameters {
    states: usize,
    beta: f64,
    gamma: f64,
    min_instances: usize,
    alpha: f64,
    max_iters: usize,
    seed: u64,
    reg_lambda: f64,
    /// `None` keeps every candidate.
    candidate_cap: Option<usize>,
    /// `"increasing"` or `"decreasing"`.
    length_sort: String,
}

#[pymethods]
impl PyHyperparameters {
    #[new]
    #[pyo3(signature = (
        *,
        states = 10,
        beta = 25.0,
        gamma = 0.8,
        min_instances = 10,
        alpha = 0.001,
        max_iters = 20,
        seed = 0,
        reg_lambda = 0.01,
        candidate_cap = Some(25),
        length_sort = "increasing".to_string(),
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        states: usize,
        beta: f64,
        gamma: f64,
        min_instances: usize,
        alpha: f64,
        max_iters: usize,
        seed: u64,
        reg_lambda: f64,
        candidate_cap: Option<usize>,
        length_sort: String,
    ) -> PyResult<Self> {
        let hp = Self {
            states,
            beta,
            gamma,
            min_instances,
            alpha,
            max_iters,
            seed,
            reg_lambda,
            candidate_cap,
            length_sort,
        };
        hp.to_core()?;
        Ok(hp)
    }

    fn __repr__(&self) -> String {
        format!(
            "Hyperparameters(states={}, beta={}, gamma={}, min_instances={}, alpha={}, max_iters={}, seed={}, reg_lambda={}, candidate_cap={:?}, length_sort={:?})",
            self.states,
            self.beta,
            self.gamma,
            self.min_instances,
            self.alpha,
            self.max_iters,
            self.seed,
            self.reg_lambda,
            self.candidate_cap,
            self.length_sort
        )
    }
}

impl PyHyperparameters {
    fn to_core(&self) -> PyResult<Hyperparameters> {
        let hp = Hyperparameters {
            k_states: self.states,
            beta: self.beta,
            gamma: self.gamma,
            min_instances: self.min_instances,
            alpha: self.alpha,
            max_iters: self.max_iters,
            seed: self.seed,
            reg_lambda: self.reg_lambda,
            candidate_cap: self.candidate_cap,
            length_sort: self.length_sort.parse::<LengthSort>().map_err(to_py_err)?,
        };
        hp.validate().map_err(to_py_err)?;
        Ok(hp)
    }
}

fn hp_or_default(hp: Option<&PyHyperparameters>) -> PyResult<Hyperparameters> {
    hp.map_or_else(|| Ok(Hyperparameters::default()), PyHyperparameters::to_core)
}

#[pyclass(name = "MasaResult", module = "pymasa", frozen)]
struct PyMasaResult {
    inner: MasaResult,
    hp: Hyperparameters,
}

#[pymethods]
impl PyMasaResult {
    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.inner.assignment.labels().to_vec()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn total_score(&self) -> f64 {
        self.inner.motifs.total_score
    }

    /// Ranked motifs with their instances, as in `motifs.json`.
    #[getter]
    fn motifs<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serialize_to_py(py, &MotifsFile::from_set(&self.inner.motifs).motifs)
    }

    /// Per-iteration diagnostics, as in `diagnostics.json`.
    #[getter]
    fn history<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serialize_to_py(py, &self.inner.history)
    }

    /// Writes assignment.csv, motifs.json, model.json and diagnostics.json.
    #[pyo3(signature = (output, wall_time_seconds = 0.0))]
    fn write(&self, output: PathBuf, wall_time_seconds: f64) -> PyResult<()> {
        write_run_outputs(&output, &self.inner, &self.hp, wall_time_seconds).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "MasaResult(iterations={}, converged={}, motifs={}, instances={})",
            self.inner.iterations,
            self.inner.converged,
            self.inner.motifs.len(),
            self.inner.motifs.instance_count()
        )
    }
}

/// Runs MASA to convergence (or `max_iters`).
#[pyfunction]
#[pyo3(signature = (ts, hp = None))]
fn run(py: Python<'_>, ts: &PyTimeSeries, hp: Option<&PyHyperparameters>) -> PyResult<PyMasaResult> {
    let hp = hp_or_default(hp)?;
    let inner = py.detach(|| run_masa(&ts.inner, &hp)).map_err(to_py_err)?;
    Ok(PyMasaResult { inner, hp })
}

/// Runs on a CSV file and writes the result files, as `masa run` does.
#[pyfunction]
#[pyo3(signature = (input, output, hp = None, standardize = false))]
fn run_csv(
    py: Python<'_>,
    input: PathBuf,
    output: PathBuf,
    hp: Option<&PyHyperparameters>,
    standardize: bool,
) -> PyResult<PyMasaResult> {
    let cfg = RunConfig {
        input,
        output,
        hyperparameters: hp_or_default(hp)?,
        standardize,
    };
    let inner = py.detach(|| cmd_run(&cfg)).map_err(to_py_err)?;
    Ok(PyMasaResult {
        inner,
        hp: cfg.hyperparameters,
    })
}

/// Labels from the seeded initialisation plus one plain proposal.
#[pyfunction]
#[pyo3(signature = (ts, hp = None))]
fn baseline(py: Python<'_>, ts: &PyTimeSeries, hp: Option<&PyHyperparameters>) -> PyResult<Vec<usize>> {
    let hp = hp_or_default(hp)?;
    let a = py.detach(|| baseline_assignment(&ts.inner, &hp)).map_err(to_py_err)?;
    Ok(a.into_labels())
}

/// Synthetic series with a planted `A B C D` motif. Returns the series and
/// a dict with `labels`, `motif_mask` and `perturbed`.
#[pyfunction]
#[pyo3(signature = (macro_segments = 1000, epsilon = 0.2, seed = 0, states = 10))]
fn synth<'py>(
    py: Python<'py>,
    macro_segments: usize,
    epsilon: f64,
    seed: u64,
    states: usize,
) -> PyResult<(PyTimeSeries, Bound<'py, PyDict>)> {
    let cfg = SynthConfig {
        n_macro: macro_segments,
        epsilon,
        seed,
        k_states: states,
        ..SynthConfig::default()
    };
    let (ts, truth) = gen_synthetic(&cfg).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("labels", &truth.labels)?;
    dict.set_item("motif_mask", &truth.motif_mask)?;
    dict.set_item("perturbed", truth.perturbed_mask())?;
    Ok((PyTimeSeries { inner: ts }, dict))
}

/// Matches predicted labels to the truth and scores them.
#[pyfunction]
#[pyo3(signature = (pred, truth, motif_mask, motif_states = None))]
fn evaluate<'py>(
    py: Python<'py>,
    pred: Vec<usize>,
    truth: Vec<usize>,
    motif_mask: Vec<bool>,
    motif_states: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyAny>> {
    let states = motif_states.unwrap_or_else(|| MOTIF_STATES.to_vec());
    let m = evaluate_labels(&pred, &truth, &motif_mask, &states).map_err(to_py_err)?;
    serialize_to_py(py, &m)
}

#[pymodule]
fn pymasa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTimeSeries>()?;
    m.add_class::<PyHyperparameters>()?;
    m.add_class::<PyMasaResult>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_csv, m)?)?;
    m.add_function(wrap_pyfunction!(baseline, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add("MOTIF_STATES", MOTIF_STATES.to_vec())?;
    Ok(())
}
