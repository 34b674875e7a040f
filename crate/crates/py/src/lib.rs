//! Python bindings for the pulse-chain simulator.

use std::path::PathBuf;

use exprise_core::atom::{self, AtomParams};
use exprise_core::envelope::CircuitParams;
use exprise_core::eom;
use exprise_core::etalon::{self, EtalonParams, EtalonStack};
use exprise_core::{ChainConfig, ChainRun, Direction, Error, FitResult, TimeGrid, Unit, Waveform};
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match &e {
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ if e.is_numerical() => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Chain configuration. Mutate with `set`, which returns a new object.
#[pyclass(name = "Config", module = "exprise", from_py_object)]
#[derive(Clone)]
struct PyConfig(ChainConfig);

#[pymethods]
impl PyConfig {
    #[new]
    fn new() -> Self {
        Self(ChainConfig::default())
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        ChainConfig::from_file(&path).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        ChainConfig::from_toml_str(text).map(Self).map_err(to_py)
    }

    fn to_toml(&self) -> PyResult<String> {
        self.0.to_toml_string().map_err(to_py)
    }

    /// Copy with the parameter at dotted `path` set to `value`.
    fn set(&self, path: &str, value: f64) -> PyResult<Self> {
        self.0.set_parameter(path, value).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn parameter_paths() -> Vec<String> {
        ChainConfig::parameter_paths()
    }

    fn validate(&self) -> PyResult<()> {
        self.0.validate().map_err(to_py)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Config(seed={})", self.0.seed)
    }
}

fn trace_tuple(w: &Waveform) -> (Vec<f64>, Vec<Complex64>) {
    (w.grid().times().collect(), w.samples().to_vec())
}

/// Result of one chain run.
#[pyclass(name = "Run", module = "exprise", frozen)]
struct PyRun(ChainRun);

#[pymethods]
impl PyRun {
    /// The report as a JSON string.
    fn report_json(&self) -> PyResult<String> {
        self.0.report.to_json().map_err(to_py)
    }

    fn summary(&self) -> String {
        self.0.report.to_string()
    }

    #[getter]
    fn degenerate(&self) -> bool {
        self.0.report.degenerate
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.0.report.warnings.clone()
    }

    /// Detected rise time constant in ns, if a fit was possible.
    #[getter]
    fn detected_rise_ns(&self) -> Option<f64> {
        self.0.report.detected.pulse.rise.as_ref().map(|f| f.tau_ns)
    }

    #[getter]
    fn detected_fall_ns(&self) -> Option<f64> {
        self.0.report.detected.pulse.fall.as_ref().map(|f| f.tau_ns)
    }

    #[getter]
    fn extinction_db(&self) -> f64 {
        self.0.report.etalon.cascade_extinction_db
    }

    #[getter]
    fn p_max(&self) -> Option<f64> {
        self.0.report.atom.as_ref().map(|a| a.p_max)
    }

    /// `(times_s, samples)` for one of gate, v_be, v_out, rf, optical,
    /// detected, excitation.
    fn trace(&self, name: &str) -> PyResult<(Vec<f64>, Vec<Complex64>)> {
        let t = &self.0.traces;
        let w = match name {
            "gate" => &t.gate,
            "v_be" => &t.v_be,
            "v_out" => &t.v_out,
            "rf" => &t.rf,
            "optical" => &t.optical,
            "detected" => &t.detected,
            "excitation" => t
                .excitation
                .as_ref()
                .ok_or_else(|| PyValueError::new_err("this run has no excitation trace"))?,
            other => return Err(PyValueError::new_err(format!("unknown trace `{other}`"))),
        };
        Ok(trace_tuple(w))
    }

    /// Writes traces and reports into `dir`.
    fn write(&self, dir: PathBuf) -> PyResult<()> {
        exprise_core::write_outputs(&self.0, &dir).map_err(to_py)
    }
}

#[pyclass(name = "Fit", module = "exprise", frozen)]
struct PyFit(FitResult);

#[pymethods]
impl PyFit {
    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau
    }
    #[getter]
    fn amplitude(&self) -> f64 {
        self.0.amplitude
    }
    #[getter]
    fn offset(&self) -> f64 {
        self.0.offset
    }
    #[getter]
    fn residual_norm(&self) -> f64 {
        self.0.residual_norm
    }
    #[getter]
    fn window(&self) -> (f64, f64) {
        self.0.window
    }

    fn __repr__(&self) -> String {
        format!("Fit(tau={:e}, residual_norm={:e})", self.0.tau, self.0.residual_norm)
    }
}

#[pyclass(name = "Excitation", module = "exprise", frozen)]
struct PyExcitation {
    #[pyo3(get)]
    p_max: f64,
    #[pyo3(get)]
    t_at_max: f64,
    #[pyo3(get)]
    p_trace: Vec<f64>,
}

fn waveform_from(times: &[f64], values: Vec<Complex64>, unit: Unit) -> PyResult<Waveform> {
    if times.len() != values.len() {
        return Err(PyValueError::new_err(format!(
            "{} times but {} samples",
            times.len(),
            values.len()
        )));
    }
    if times.len() < 2 {
        return Err(PyValueError::new_err("need at least 2 samples"));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if let Some(i) = (1..times.len()).find(|&i| ((times[i] - times[i - 1]) - dt).abs() > 1e-6 * dt.abs()) {
        return Err(PyValueError::new_err(format!("times are not uniform at index {i}")));
    }
    let grid = TimeGrid::new(times[0], dt, times.len()).map_err(to_py)?;
    Waveform::new(grid, values, unit).map_err(to_py)
}

#[pyfunction]
fn run(py: Python<'_>, config: PyConfig) -> PyResult<PyRun> {
    py.detach(|| exprise_core::run_chain(&config.0))
        .map(PyRun)
        .map_err(to_py)
}

#[pyfunction]
fn sweep(py: Python<'_>, config: PyConfig, path: &str, values: Vec<f64>) -> PyResult<Vec<PyRun>> {
    let runs = py
        .detach(|| exprise_core::sweep(&config.0, path, &values))
        .map_err(to_py)?;
    Ok(runs.into_iter().map(PyRun).collect())
}

/// Fits `A·exp(±(t - t0)/tau) + C` over `window` (seconds).
#[pyfunction]
fn fit_exponential(times: Vec<f64>, values: Vec<f64>, window: (f64, f64), direction: &str) -> PyResult<PyFit> {
    let direction: Direction = direction.parse().map_err(to_py)?;
    let w = waveform_from(
        &times,
        values.into_iter().map(Complex64::from).collect(),
        Unit::Dimensionless,
    )?;
    exprise_core::fit_exponential(&w, window, direction)
        .map(PyFit)
        .map_err(to_py)
}

/// Excitation of a two-level atom by a pulse used as the photon's mode.
#[pyfunction]
#[pyo3(signature = (times, field, lifetime=26.2e-9, lambda_overlap=1.0, detuning_hz=0.0))]
fn excite(
    times: Vec<f64>,
    field: Vec<Complex64>,
    lifetime: f64,
    lambda_overlap: f64,
    detuning_hz: f64,
) -> PyResult<PyExcitation> {
    let w = waveform_from(&times, field, Unit::SqrtWatts)?;
    let a = AtomParams {
        gamma: 1.0 / lifetime,
        lambda_overlap,
        detuning_hz,
    };
    let r = atom::excite(&w, &a).map_err(to_py)?;
    Ok(PyExcitation {
        p_max: r.p_max,
        t_at_max: r.t_at_max,
        p_trace: r.p_trace.real_parts(),
    })
}

fn etalon_params(reflectivity: f64, fsr_hz: f64, detuning_hz: f64, loss: f64) -> PyResult<EtalonParams> {
    let e = EtalonParams {
        reflectivity,
        fsr_hz,
        detuning_hz,
        loss,
        ..EtalonParams::default()
    };
    e.validate().map_err(to_py)?;
    Ok(e)
}

/// Field transmission of `stages` identical etalons at `f_offset` Hz from resonance.
#[pyfunction]
#[pyo3(signature = (f_offset, reflectivity=0.95, fsr_hz=17e9, detuning_hz=0.0, loss=0.0, stages=1))]
fn etalon_transmission(
    f_offset: f64,
    reflectivity: f64,
    fsr_hz: f64,
    detuning_hz: f64,
    loss: f64,
    stages: usize,
) -> PyResult<Complex64> {
    let e = etalon_params(reflectivity, fsr_hz, detuning_hz, loss)?;
    let s = EtalonStack::uniform(e, stages).map_err(to_py)?;
    Ok(etalon::stack_transmission(f_offset, &s))
}

/// `(fwhm_hz, finesse, ringdown_s)` of one etalon.
#[pyfunction]
#[pyo3(signature = (reflectivity=0.95, fsr_hz=17e9, loss=0.0))]
fn etalon_linewidth(reflectivity: f64, fsr_hz: f64, loss: f64) -> PyResult<(f64, f64, f64)> {
    let e = etalon_params(reflectivity, fsr_hz, 0.0, loss)?;
    Ok((e.fwhm_hz(), e.finesse(), e.ringdown_s()))
}

/// First-sideband field amplitude for a drive of `x` times V_π.
#[pyfunction]
fn sideband_amplitude(x: f64) -> f64 {
    eom::sideband_amplitude(x)
}

#[pyfunction]
fn distortion_fraction(x: f64) -> f64 {
    eom::distortion_fraction(x)
}

/// Control voltage giving rise time `tau` with the default circuit.
#[pyfunction]
fn control_voltage_for(tau: f64) -> PyResult<f64> {
    CircuitParams::default().with_tau(tau).map(|p| p.v_in).map_err(to_py)
}

#[pymodule]
fn exprise(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyRun>()?;
    m.add_class::<PyFit>()?;
    m.add_class::<PyExcitation>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(excite, m)?)?;
    m.add_function(wrap_pyfunction!(etalon_transmission, m)?)?;
    m.add_function(wrap_pyfunction!(etalon_linewidth, m)?)?;
    m.add_function(wrap_pyfunction!(sideband_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(distortion_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(control_voltage_for, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
