//! Python bindings for the random-demodulator simulator.

use std::collections::HashMap;
use std::path::PathBuf;

use nalgebra::DMatrix;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use rdsim_core::experiments::report::{error_grid_csv, to_json_pretty};
use rdsim_core::experiments::{self, ReportFormat};
use rdsim_core::photonic::{self, ModulatorParams};
use rdsim_core::reconstruction;
use rdsim_core::waveforms::{self, Unit, Waveform};
use rdsim_core::Error;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        Error::Solver(_) => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

/// Experiment configuration (grid, tones, PRBS, modulator, receiver, solver).
#[pyclass(name = "TrialConfig", module = "rdsim", from_py_object)]
#[derive(Clone)]
struct PyTrialConfig {
    inner: experiments::TrialConfig,
}

#[pymethods]
impl PyTrialConfig {
    /// The shipped four-tone, 500 MHz-bandlimited default.
    #[new]
    fn new() -> Self {
        Self {
            inner: experiments::TrialConfig::shipped_default(),
        }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        experiments::TrialConfig::from_toml_str(text)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        experiments::TrialConfig::load(&path)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml_string().map_err(to_py)
    }

    fn with_amplitude_ratio(&self, ratio: f64) -> Self {
        Self {
            inner: self.inner.with_amplitude_ratio(ratio),
        }
    }

    fn with_position(&self, position: usize) -> Self {
        Self {
            inner: self.inner.with_position(position),
        }
    }

    /// Drops the transmit bandwidth limit (ideal NRZ code).
    fn ideal(&self) -> Self {
        let mut inner = self.inner.clone();
        inner.prbs.bandwidth_hz = None;
        Self { inner }
    }

    fn with_thermal_noise(&self, variance: f64, seed: u64) -> Self {
        let mut inner = self.inner.clone();
        inner.noise = photonic::NoiseSpec::thermal(variance, seed);
        Self { inner }
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    #[getter]
    fn amplitude_ratio(&self) -> f64 {
        self.inner.amplitude_ratio()
    }

    #[getter]
    fn position(&self) -> usize {
        self.inner.receiver.position
    }

    #[getter]
    fn sparsity_budget(&self) -> usize {
        self.inner.sparsity_budget()
    }

    fn __repr__(&self) -> String {
        format!(
            "TrialConfig(amplitude_ratio={}, position={}, tones={}, bandwidth_hz={})",
            self.inner.amplitude_ratio(),
            self.inner.receiver.position,
            self.inner.signal.tones.len(),
            self.inner
                .prbs
                .bandwidth_hz
                .map_or("None".to_string(), |b| b.to_string())
        )
    }
}

/// Outcome of one trial.
#[pyclass(name = "TrialRecord", module = "rdsim", skip_from_py_object)]
struct PyTrialRecord {
    inner: experiments::TrialRecord,
}

#[pymethods]
impl PyTrialRecord {
    #[getter]
    fn error(&self) -> f64 {
        self.inner.error
    }

    #[getter]
    fn amplitude_ratio(&self) -> f64 {
        self.inner.amplitude_ratio
    }

    #[getter]
    fn position(&self) -> usize {
        self.inner.position
    }

    #[getter]
    fn support(&self) -> Vec<usize> {
        self.inner.support.clone()
    }

    #[getter]
    fn support_frequencies_hz(&self) -> Vec<f64> {
        self.inner.support_frequencies_hz.clone()
    }

    #[getter]
    fn coefficients_rad(&self) -> Vec<f64> {
        self.inner.coefficients_rad.clone()
    }

    #[getter]
    fn residual_norms(&self) -> Vec<f64> {
        self.inner.residual_norms.clone()
    }

    #[getter]
    fn config_fingerprint(&self) -> String {
        self.inner.config_fingerprint.clone()
    }

    /// `{"frequencies_hz", "original_rad", "reconstructed_rad"}` arrays.
    fn spectra(&self) -> HashMap<&'static str, Vec<f64>> {
        let s = &self.inner.spectra;
        HashMap::from([
            ("frequencies_hz", s.frequencies_hz.clone()),
            ("original_rad", s.original_rad.clone()),
            ("reconstructed_rad", s.reconstructed_rad.clone()),
        ])
    }

    fn to_json(&self) -> PyResult<String> {
        to_json_pretty(&self.inner).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "TrialRecord(amplitude_ratio={}, position={}, error={:.6})",
            self.inner.amplitude_ratio, self.inner.position, self.inner.error
        )
    }
}

/// Amplitude × position error grid with per-amplitude means.
#[pyclass(name = "SweepReport", module = "rdsim", skip_from_py_object)]
struct PySweepReport {
    inner: experiments::SweepReport,
}

#[pymethods]
impl PySweepReport {
    #[getter]
    fn amplitudes(&self) -> Vec<f64> {
        self.inner.amplitudes.clone()
    }

    #[getter]
    fn positions(&self) -> Vec<usize> {
        self.inner.positions.clone()
    }

    /// Rows per amplitude; `None` marks a failed trial.
    #[getter]
    fn error_grid(&self) -> Vec<Vec<Option<f64>>> {
        self.inner.error_grid.clone()
    }

    #[getter]
    fn mean_errors(&self) -> Vec<Option<f64>> {
        self.inner.mean_errors.clone()
    }

    #[getter]
    fn max_reduction(&self) -> Option<f64> {
        self.inner.max_reduction
    }

    #[getter]
    fn n_missing(&self) -> usize {
        self.inner.missing.len()
    }

    fn mean_at(&self, ratio: f64) -> Option<f64> {
        self.inner.mean_at(ratio)
    }

    fn to_csv(&self) -> String {
        error_grid_csv(&self.inner)
    }

    fn to_json(&self) -> PyResult<String> {
        to_json_pretty(&self.inner).map_err(to_py)
    }

    /// Writes CSV, JSON, per-trial records and spectra under `out_dir`.
    fn write(&self, out_dir: PathBuf) -> PyResult<Vec<PathBuf>> {
        experiments::emit_report(&self.inner, &out_dir, &ReportFormat::ALL).map_err(to_py)
    }
}

#[pyfunction]
fn run_single_trial(py: Python<'_>, config: PyTrialConfig) -> PyResult<PyTrialRecord> {
    py.detach(|| experiments::run_single_trial(&config.inner))
        .map(|inner| PyTrialRecord { inner })
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (config, amplitudes=None, positions=None))]
fn run_sweep(
    py: Python<'_>,
    config: PyTrialConfig,
    amplitudes: Option<Vec<f64>>,
    positions: Option<Vec<usize>>,
) -> PyResult<PySweepReport> {
    let amps = amplitudes.unwrap_or_else(|| config.inner.sweep.amplitude_ratios.clone());
    let pos = positions.unwrap_or_else(|| config.inner.sweep.positions.clone());
    py.detach(|| experiments::run_sweep(&config.inner, &amps, &pos))
        .map(|inner| PySweepReport { inner })
        .map_err(to_py)
}

#[pyfunction]
fn load_report(dir: PathBuf) -> PyResult<PySweepReport> {
    let (records, _) = experiments::load_records(&dir).map_err(to_py)?;
    experiments::report_from_records(records)
        .map(|inner| PySweepReport { inner })
        .map_err(to_py)
}

/// Energies of the mixed, second-harmonic and signal-independent terms.
#[pyfunction]
fn decompose_terms(config: PyTrialConfig) -> PyResult<HashMap<&'static str, f64>> {
    let t = experiments::decompose_terms(&config.inner).map_err(to_py)?;
    Ok(HashMap::from([
        ("amplitude_ratio", t.amplitude_ratio),
        ("mixed", t.mixed),
        ("second_harmonic", t.second_harmonic),
        ("signal_independent", t.signal_independent),
        ("signal_independent_ac", t.signal_independent_ac),
        ("harmonic_to_mixed", t.harmonic_to_mixed()),
    ]))
}

/// `n_chips` ±1 PRBS-15 chips.
#[pyfunction]
#[pyo3(signature = (n_chips, seed=0x7FFF))]
fn prbs15_chips(n_chips: usize, seed: u16) -> PyResult<Vec<i8>> {
    waveforms::generate_chip_sequence(seed, n_chips, 1.0)
        .map(|c| c.chips().to_vec())
        .map_err(to_py)
}

/// Exact modulator intensity for sampled PRBS drive (volts) and signal (radians).
#[pyfunction]
#[pyo3(signature = (prbs_drive, signal, v_pi=1.0, v_dc=None))]
fn mzm_output(prbs_drive: Vec<f64>, signal: Vec<f64>, v_pi: f64, v_dc: Option<f64>) -> PyResult<Vec<f64>> {
    let grid = waveforms::make_time_grid(1.0, prbs_drive.len()).map_err(to_py)?;
    let params = ModulatorParams {
        v_pi,
        v_dc: v_dc.unwrap_or(v_pi),
        v_code: v_pi / 2.0,
    };
    let drive = Waveform::new(grid, prbs_drive, Unit::Volts).map_err(to_py)?;
    let x = Waveform::new(grid, signal, Unit::Radians).map_err(to_py)?;
    photonic::mzm_output(&drive, &x, &params)
        .map(Waveform::into_samples)
        .map_err(to_py)
}

/// OMP on a row-major matrix; returns `(support, coefficients)`.
#[pyfunction]
#[pyo3(signature = (matrix, y, sparsity_budget, residual_tol=1e-6))]
fn omp(
    matrix: Vec<Vec<f64>>,
    y: Vec<f64>,
    sparsity_budget: usize,
    residual_tol: f64,
) -> PyResult<(Vec<usize>, Vec<f64>)> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    if matrix.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("matrix rows differ in length"));
    }
    let a = DMatrix::from_fn(rows, cols, |i, j| matrix[i][j]);
    let sol = reconstruction::omp(&a, &y, sparsity_budget, residual_tol).map_err(to_py)?;
    Ok((sol.support, sol.coefficients))
}

#[pyfunction]
fn reconstruction_error(x_rec: Vec<f64>, x_true: Vec<f64>) -> PyResult<f64> {
    let grid = waveforms::make_time_grid(1.0, x_true.len()).map_err(to_py)?;
    let a = Waveform::new(grid, x_rec, Unit::Radians).map_err(to_py)?;
    let b = Waveform::new(grid, x_true, Unit::Radians).map_err(to_py)?;
    reconstruction::reconstruction_error(&a, &b).map_err(to_py)
}

#[pymodule]
fn rdsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", experiments::TOOL_VERSION)?;
    m.add("REFERENCE_AMPLITUDES", experiments::REFERENCE_AMPLITUDES.to_vec())?;
    m.add_class::<PyTrialConfig>()?;
    m.add_class::<PyTrialRecord>()?;
    m.add_class::<PySweepReport>()?;
    m.add_function(wrap_pyfunction!(run_single_trial, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(load_report, m)?)?;
    m.add_function(wrap_pyfunction!(decompose_terms, m)?)?;
    m.add_function(wrap_pyfunction!(prbs15_chips, m)?)?;
    m.add_function(wrap_pyfunction!(mzm_output, m)?)?;
    m.add_function(wrap_pyfunction!(omp, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruction_error, m)?)?;
    Ok(())
}
