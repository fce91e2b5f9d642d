//! Python bindings: series handling, Gram eigenvalues, convergence scans,
//! frequency extraction, mean-ergodic averages and the reference simulators.
//!
//! Structured results come back as plain dicts and lists.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use koopspec::grid::{amplitude_map as core_amplitude_map, GriddedDataset};
use koopspec::modes::radians_to_cycles;
use koopspec::{
    Complex64, Error, Extraction, IntegrationConfig, Lorenz63State, RotorState, ScanGrid,
    ToleranceConfig,
};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        Error::NoConvergence { .. } | Error::Divergence { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_extraction(method: &str) -> PyResult<Extraction> {
    match method {
        "dft_peak" => Ok(Extraction::DftPeak),
        "local_maxima" => Ok(Extraction::LocalMaximaCount),
        other => Err(PyValueError::new_err(format!(
            "unknown extraction `{other}`; expected dft_peak or local_maxima"
        ))),
    }
}

/// A uniformly sampled complex observable.
#[pyclass(name = "TimeSeries", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTimeSeries {
    inner: koopspec::TimeSeries,
}

#[pymethods]
impl PyTimeSeries {
    #[new]
    #[pyo3(signature = (values, dt = 1.0, label = "series"))]
    fn new(values: Vec<Complex64>, dt: f64, label: &str) -> PyResult<Self> {
        let inner = koopspec::TimeSeries::new(values, dt, label).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Read a `t,value` or `t,re,im` CSV file.
    #[staticmethod]
    fn from_csv(path: PathBuf) -> PyResult<Self> {
        let file = File::open(&path).map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))?;
        let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let inner = koopspec::TimeSeries::read_csv(BufReader::new(file), label).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "TimeSeries(label={:?}, len={}, dt={})",
            self.inner.label(),
            self.inner.len(),
            self.inner.dt()
        )
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    #[getter]
    fn is_real(&self) -> bool {
        self.inner.is_real()
    }

    fn values(&self) -> Vec<Complex64> {
        self.inner.values().to_vec()
    }

    fn mean_energy(&self) -> f64 {
        self.inner.mean_energy()
    }

    fn conj(&self) -> Self {
        Self { inner: self.inner.conj() }
    }

    fn truncated(&self, len: usize) -> PyResult<Self> {
        Ok(Self { inner: self.inner.truncated(len).map_err(to_py_err)? })
    }
}

/// Lags `rho_0..=rho_max_lag` averaged over `n` products (default: as many as fit).
#[pyfunction]
#[pyo3(signature = (series, max_lag, n = None))]
fn autocovariance(series: &PyTimeSeries, max_lag: usize, n: Option<usize>) -> PyResult<Vec<Complex64>> {
    let n = n.unwrap_or_else(|| series.inner.len().saturating_sub(max_lag));
    let rho = koopspec::autocovariance(&series.inner, max_lag, n).map_err(to_py_err)?;
    Ok(rho.rho)
}

/// The `(N+1) x (N+1)` Gram matrix as nested rows.
#[pyfunction]
fn build_gram(series: &PyTimeSeries, n_delay: usize, m_avg: usize) -> PyResult<Vec<Vec<Complex64>>> {
    let g = koopspec::build_gram(&series.inner, n_delay, m_avg).map_err(to_py_err)?;
    let a = g.entries();
    Ok((0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect())
}

/// Leading `k` eigenpairs of the Gram matrix at `(n_delay, m_avg)`.
#[pyfunction]
fn top_eigen<'py>(
    py: Python<'py>,
    series: &PyTimeSeries,
    n_delay: usize,
    m_avg: usize,
    k: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let g = koopspec::build_gram(&series.inner, n_delay, m_avg).map_err(to_py_err)?;
    let r = py.detach(|| koopspec::top_eigen(&g, k)).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("eigenvalues", &r.eigenvalues)?;
    out.set_item("renormalized", &r.renormalized)?;
    out.set_item("eigenvectors", &r.eigenvectors)?;
    out.set_item("residuals", &r.residuals)?;
    out.set_item("path", json_to_py(py, &r.path)?)?;
    Ok(out.into_any())
}

/// Convergence scan over `n_values` with per-`N` rows `m_values`.
///
/// `m_values` may be a single list shared by every `N`.
#[pyfunction]
#[pyo3(signature = (
    series, n_values, m_values, top_k = 8, eps_m = 0.05, eps_n = 0.1, tail_window = 3,
    energy_floor = 0.01, m_over_n_floor = 10.0
))]
#[allow(clippy::too_many_arguments)]
fn run_scan<'py>(
    py: Python<'py>,
    series: &PyTimeSeries,
    n_values: Vec<usize>,
    m_values: Bound<'py, PyAny>,
    top_k: usize,
    eps_m: f64,
    eps_n: f64,
    tail_window: usize,
    energy_floor: f64,
    m_over_n_floor: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let grid = match m_values.extract::<Vec<usize>>() {
        Ok(row) => ScanGrid::uniform(n_values, row, top_k, m_over_n_floor),
        Err(_) => ScanGrid::new(n_values, m_values.extract()?, top_k, m_over_n_floor),
    }
    .map_err(to_py_err)?;
    let tol = ToleranceConfig {
        eps_m,
        eps_n,
        tail_window,
        energy_floor_fraction: energy_floor,
        m_over_n_floor,
    };
    let report = py
        .detach(|| koopspec::run_scan(&series.inner, &grid, &tol))
        .map_err(to_py_err)?;
    let out = json_to_py(py, &report)?;
    out.set_item("final_eigenvectors", &report.final_eigenvectors)?;
    Ok(out)
}

/// Frequency (radians per step) carried by an eigenvector.
#[pyfunction]
#[pyo3(signature = (eigvec, method = "dft_peak"))]
fn extract_frequency<'py>(
    py: Python<'py>,
    eigvec: Vec<Complex64>,
    method: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let f = koopspec::extract_frequency(&eigvec, parse_extraction(method)?).map_err(to_py_err)?;
    let out = json_to_py(py, &f)?;
    out.set_item("omega_cycles", radians_to_cycles(f.omega))?;
    Ok(out)
}

/// Mean-ergodic amplitude `a_omega` at `omega` cycles per step.
#[pyfunction]
#[pyo3(signature = (series, omega, t_used = None))]
fn yosida(series: &PyTimeSeries, omega: f64, t_used: Option<usize>) -> PyResult<Complex64> {
    let t = t_used.unwrap_or(series.inner.len());
    let y = koopspec::yosida(&series.inner, omega, t).map_err(to_py_err)?;
    Ok(y.a_omega)
}

/// `(omega, a_omega)` pairs on a uniform grid of cycles per step.
#[pyfunction]
#[pyo3(signature = (series, omega_min, omega_max, n_points, t_used = None))]
fn yosida_scan(
    py: Python<'_>,
    series: &PyTimeSeries,
    omega_min: f64,
    omega_max: f64,
    n_points: usize,
    t_used: Option<usize>,
) -> PyResult<Vec<(f64, Complex64)>> {
    let t = t_used.unwrap_or(series.inner.len());
    let scan = py
        .detach(|| koopspec::yosida_scan(&series.inner, omega_min, omega_max, n_points, t))
        .map_err(to_py_err)?;
    Ok(scan.into_iter().map(|e| (e.omega, e.a_omega)).collect())
}

/// Centered `x` coordinate of a Lorenz-63 trajectory (RK4).
#[pyfunction]
#[pyo3(signature = (steps, dt = 0.01, burn_in = 10_000, initial = (1.0, 1.0, 1.0)))]
fn simulate_lorenz63(
    py: Python<'_>,
    steps: usize,
    dt: f64,
    burn_in: usize,
    initial: (f64, f64, f64),
) -> PyResult<PyTimeSeries> {
    let cfg = IntegrationConfig { dt, burn_in };
    let state = Lorenz63State::new(initial.0, initial.1, initial.2);
    let inner = py
        .detach(|| koopspec::integrate_lorenz63(state, steps, &cfg))
        .map_err(to_py_err)?;
    Ok(PyTimeSeries { inner })
}

/// Lorenz-63 `x` times a rotor of the given period (mixed spectrum).
#[pyfunction]
#[pyo3(signature = (steps, period = std::f64::consts::PI / 5.0, dt = 0.01, burn_in = 10_000, xi0 = 0.0))]
fn simulate_rotor(
    py: Python<'_>,
    steps: usize,
    period: f64,
    dt: f64,
    burn_in: usize,
    xi0: f64,
) -> PyResult<PyTimeSeries> {
    let cfg = IntegrationConfig { dt, burn_in };
    let state = RotorState {
        lorenz: Lorenz63State::new(1.0, 1.0, 1.0),
        xi: xi0,
    };
    let inner = py
        .detach(|| koopspec::integrate_rotor(state, steps, &cfg, period))
        .map_err(to_py_err)?;
    Ok(PyTimeSeries { inner })
}

/// Sum of complex tones (radians per step) plus circular Gaussian noise.
#[pyfunction]
#[pyo3(signature = (amps, omegas, steps, noise_std = 0.0, seed = 0))]
fn synth_tones(
    amps: Vec<Complex64>,
    omegas: Vec<f64>,
    steps: usize,
    noise_std: f64,
    seed: u64,
) -> PyResult<PyTimeSeries> {
    let tones = koopspec::synth_tones(&amps, &omegas, noise_std, seed, steps).map_err(to_py_err)?;
    Ok(PyTimeSeries { inner: tones.series })
}

/// `|a_omega|` per cell of a gridded dataset given by its JSON header.
#[pyfunction]
#[pyo3(signature = (header, omega, t_used = None, detrend = false, normalize = false))]
fn amplitude_map<'py>(
    py: Python<'py>,
    header: PathBuf,
    omega: f64,
    t_used: Option<usize>,
    detrend: bool,
    normalize: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let dataset = GriddedDataset::read(&header).map_err(to_py_err)?;
    let t = t_used.unwrap_or(dataset.nt);
    let map = py
        .detach(|| core_amplitude_map(&dataset, omega, t, detrend, normalize))
        .map_err(to_py_err)?;
    json_to_py(py, &map)
}

#[pymodule]
#[pyo3(name = "koopspec")]
fn koopspec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTimeSeries>()?;
    m.add_function(wrap_pyfunction!(autocovariance, m)?)?;
    m.add_function(wrap_pyfunction!(build_gram, m)?)?;
    m.add_function(wrap_pyfunction!(top_eigen, m)?)?;
    m.add_function(wrap_pyfunction!(run_scan, m)?)?;
    m.add_function(wrap_pyfunction!(extract_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(yosida, m)?)?;
    m.add_function(wrap_pyfunction!(yosida_scan, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_lorenz63, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_rotor, m)?)?;
    m.add_function(wrap_pyfunction!(synth_tones, m)?)?;
    m.add_function(wrap_pyfunction!(amplitude_map, m)?)?;
    Ok(())
}
