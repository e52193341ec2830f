//! Python bindings. Structured results come back as JSON strings; use
//! `json.loads` on the Python side.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use cyclonet_core::analysis;
use cyclonet_core::config::RunConfig;
use cyclonet_core::harmonic;
use cyclonet_core::sim::{self, SimConfig};
use cyclonet_core::tables::{self, TableSetup};
use cyclonet_core::topology::{generate_topology, Topology};
use cyclonet_core::{build_laplacian, Error, Matrix, NetworkModel, OscillatorParams};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Integration { .. } | Error::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("result serializes")
}

/// One cyclic feedback loop in dimensionless form.
#[pyclass(name = "Oscillator", module = "cyclonet", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyOscillator(OscillatorParams);

#[pymethods]
impl PyOscillator {
    #[new]
    fn new(b: Vec<f64>, p: f64) -> PyResult<Self> {
        OscillatorParams::new(b, p).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn uniform(m: usize, b: f64, p: f64) -> PyResult<Self> {
        OscillatorParams::uniform(m, b, p).map(Self).map_err(to_py)
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.0.b().to_vec()
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.hill_p()
    }

    #[getter]
    fn loop_length(&self) -> usize {
        self.0.loop_length()
    }

    /// `R`, the oscillation index. Oscillation is predicted when `R > 1`.
    fn r(&self) -> PyResult<f64> {
        analysis::oscillation_condition(&self.0).map(|v| v.r).map_err(to_py)
    }

    /// Oscillation verdict as JSON.
    fn oscillation(&self) -> PyResult<String> {
        analysis::oscillation_condition(&self.0).map(|v| json(&v)).map_err(to_py)
    }

    /// Smallest algebraic connectivity satisfying the synchronization
    /// condition for `n` oscillators coupled through species `k` (1-based).
    fn required_connectivity(&self, n: usize, k: usize) -> PyResult<f64> {
        analysis::required_connectivity(&self.0, n, k).map_err(to_py)
    }

    /// Harmonic-balance frequency `mu`; the period estimate is `2 pi / mu`.
    fn balance_frequency(&self) -> PyResult<f64> {
        harmonic::solve_balance_gains(&self.0).map(|g| g.mu).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Oscillator(b={:?}, p={})", self.0.b(), self.0.hill_p())
    }
}

/// `N` identical oscillators diffusively coupled through one species.
#[pyclass(name = "Network", module = "cyclonet", frozen)]
struct PyNetwork(NetworkModel);

#[pymethods]
impl PyNetwork {
    /// `weights` is a symmetric nonnegative matrix with zero diagonal;
    /// `k` is the 1-based index of the coupled species.
    #[new]
    fn new(oscillator: &PyOscillator, weights: Vec<Vec<f64>>, k: usize) -> PyResult<Self> {
        let w = Matrix::from_rows(&weights).ok_or_else(|| PyValueError::new_err("weights must be a square matrix"))?;
        let coupling = build_laplacian(&w).map_err(to_py)?;
        NetworkModel::new(oscillator.0.clone(), coupling, k).map(Self).map_err(to_py)
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    #[getter]
    fn laplacian_eigenvalues(&self) -> Vec<f64> {
        self.0.coupling().eigenvalues().to_vec()
    }

    #[getter]
    fn algebraic_connectivity(&self) -> Option<f64> {
        self.0.coupling().algebraic_connectivity()
    }

    /// Synchronization verdict as JSON.
    fn sync(&self) -> PyResult<String> {
        analysis::sync_condition(&self.0).map(|v| json(&v)).map_err(to_py)
    }

    /// Harmonic-balance period estimate as JSON.
    fn estimate_period(&self) -> PyResult<String> {
        harmonic::estimate_period(&self.0).map(|v| json(&v)).map_err(to_py)
    }

    /// Full analysis report as JSON. With `simulate=True` a default
    /// simulation is attached as a cross-check.
    #[pyo3(signature = (simulate = false))]
    fn analyze(&self, simulate: bool) -> PyResult<String> {
        let cfg = SimConfig::default();
        cyclonet_core::report::analyze(&self.0, simulate.then_some(&cfg)).map(|r| r.to_json()).map_err(to_py)
    }

    /// Simulates the network and returns the result summary as JSON.
    /// `config` is an optional JSON object with simulation settings.
    #[pyo3(signature = (config = None))]
    fn simulate(&self, py: Python<'_>, config: Option<&str>) -> PyResult<String> {
        let cfg: SimConfig = match config {
            Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(format!("sim config: {e}")))?,
            None => SimConfig::default(),
        };
        let net = self.0.clone();
        py.detach(move || sim::simulate(&net, &cfg)).map(|(_, r)| json(&r)).map_err(to_py)
    }
}

/// Describing-function gains `(xi, eta)` of the repression nonlinearity
/// for the input `alpha + beta sin(theta)`.
#[pyfunction]
fn describing_functions(p: f64, alpha: f64, beta: f64) -> PyResult<(f64, f64)> {
    harmonic::describing_functions(p, alpha, beta).map(|g| (g.xi, g.eta)).map_err(to_py)
}

/// Symmetric random weights drawn uniformly on `[low, high]`.
#[pyfunction]
#[pyo3(signature = (n, seed, low = 0.0, high = 20.0))]
fn random_weights(n: usize, seed: u64, low: f64, high: f64) -> PyResult<Vec<Vec<f64>>> {
    generate_topology(&Topology::Random { low, high }, n, seed).map(|m| m.to_rows()).map_err(to_py)
}

/// Example run configuration as JSON.
#[pyfunction]
fn example_config() -> String {
    RunConfig::example().to_json()
}

/// Regenerates `"table1"`, `"table2"` or `"table3"` as CSV text.
#[pyfunction]
#[pyo3(signature = (table, seed = tables::DEFAULT_SEED, precision = 6))]
fn reproduce(py: Python<'_>, table: &str, seed: u64, precision: usize) -> PyResult<String> {
    let setup = TableSetup::new(seed);
    let table = table.to_owned();
    py.detach(move || match table.as_str() {
        "table1" => tables::table1(&setup).map(|r| tables::table1_csv(&r, precision)).map_err(to_py),
        "table2" => tables::table2().map(|r| tables::table2_csv(&r, precision)).map_err(to_py),
        "table3" => tables::table3(&setup).map(|r| tables::table3_csv(&r, precision)).map_err(to_py),
        other => Err(PyValueError::new_err(format!("unknown table {other:?}"))),
    })
}

#[pymodule]
fn cyclonet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOscillator>()?;
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(describing_functions, m)?)?;
    m.add_function(wrap_pyfunction!(random_weights, m)?)?;
    m.add_function(wrap_pyfunction!(example_config, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    Ok(())
}
