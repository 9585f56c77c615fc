//! Python bindings for the trusted-noise calculus.
//!
//! Results that are plain records (densities, harmonizations, reports,
//! scan tables) come back as dictionaries.

use cvtrust::keyrate::{loss_grid, run_scan as core_run_scan, ProtocolVariant, ScanConfig};
use cvtrust::lab::{analytic_sweep as core_analytic, monte_carlo_sweep, Sabotage, SweepConfig};
use cvtrust::{ChannelSpec, DetectorKind, GaussianState, Scenario};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    PyModule::import(py, "json")?.call_method1("loads", (text,))
}

fn kind(name: &str) -> PyResult<DetectorKind> {
    name.parse().map_err(err)
}

#[pyclass(name = "DetectorSpec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDetectorSpec(cvtrust::DetectorSpec);

#[pymethods]
impl PyDetectorSpec {
    #[new]
    fn new(kind_name: &str, eta_d: f64, nbar: f64) -> PyResult<Self> {
        Ok(Self(cvtrust::DetectorSpec::new(kind(kind_name)?, eta_d, nbar).map_err(err)?))
    }

    /// Detector with noise figure `nu = nbar·(1 − eta_d)`.
    #[staticmethod]
    fn from_noise_figure(kind_name: &str, eta_d: f64, nu: f64) -> PyResult<Self> {
        Ok(Self(
            cvtrust::DetectorSpec::from_noise_figure(kind(kind_name)?, eta_d, nu).map_err(err)?,
        ))
    }

    #[staticmethod]
    fn from_loss(kind_name: &str, loss: f64, nbar: f64) -> PyResult<Self> {
        Ok(Self(cvtrust::DetectorSpec::from_loss(kind(kind_name)?, loss, nbar).map_err(err)?))
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind.as_str()
    }

    #[getter]
    fn eta_d(&self) -> f64 {
        self.0.eta_d()
    }

    #[getter]
    fn loss(&self) -> f64 {
        self.0.loss()
    }

    #[getter]
    fn nbar(&self) -> f64 {
        self.0.nbar()
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.0.nu()
    }

    fn __repr__(&self) -> String {
        format!(
            "DetectorSpec('{}', eta_d={}, nbar={})",
            self.0.kind,
            self.0.eta_d(),
            self.0.nbar()
        )
    }
}

#[pyclass(name = "RescalePlan", frozen)]
struct PyRescalePlan(cvtrust::RescalePlan);

#[pymethods]
impl PyRescalePlan {
    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind.as_str()
    }

    #[getter]
    fn eta_d(&self) -> f64 {
        self.0.eta_d
    }

    #[getter]
    fn nbar(&self) -> Option<f64> {
        self.0.nbar
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.0.nu
    }

    #[getter]
    fn r(&self) -> f64 {
        self.0.r
    }

    #[getter]
    fn r_squared(&self) -> f64 {
        self.0.r_squared
    }

    #[getter]
    fn excess(&self) -> f64 {
        self.0.excess
    }

    #[getter]
    fn eta_e(&self) -> f64 {
        self.0.eta_e
    }

    /// Divides a noisy outcome by `r`.
    fn rescale(&self, outcome: f64) -> f64 {
        self.0.rescale(outcome)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }

    fn __repr__(&self) -> String {
        format!("RescalePlan(r_squared={}, eta_e={})", self.0.r_squared, self.0.eta_e)
    }
}

#[pyfunction]
fn rescale_plan(spec: &PyDetectorSpec) -> PyRescalePlan {
    PyRescalePlan(cvtrust::rescale_plan(&spec.0))
}

/// Plan in the limit `eta_d → 1` at fixed noise figure `nu`.
#[pyfunction]
fn rescale_plan_limit(nu: f64, kind_name: &str) -> PyResult<PyRescalePlan> {
    let nf = cvtrust::NoiseFigure::new(nu).map_err(err)?;
    Ok(PyRescalePlan(cvtrust::rescale_plan_limit(nf, kind(kind_name)?)))
}

/// Noise figure `nu` inferred from the outcome variance for vacuum input.
#[pyfunction]
fn calibrate(vacuum_variance: f64, kind_name: &str) -> PyResult<f64> {
    Ok(cvtrust::noise_figure_from_vacuum_variance(vacuum_variance, kind(kind_name)?)
        .map_err(err)?
        .nu)
}

#[pyfunction]
#[pyo3(signature = (specs, strategy = "added-loss"))]
fn harmonize<'py>(
    py: Python<'py>,
    specs: Vec<PyRef<'py, PyDetectorSpec>>,
    strategy: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let strategy = match strategy {
        "added-loss" => cvtrust::HarmonizeStrategy::AddedLoss,
        "added-noise" => cvtrust::HarmonizeStrategy::AddedNoise,
        other => return Err(err(format!("unknown strategy '{other}'"))),
    };
    let specs: Vec<_> = specs.iter().map(|s| s.0).collect();
    to_py(py, &cvtrust::harmonize(&specs, strategy).map_err(err)?)
}

/// Outcome density of the noisy detector for coherent input `alpha`.
#[pyfunction]
fn noisy_density<'py>(
    py: Python<'py>,
    alpha: Complex64,
    spec: &PyDetectorSpec,
) -> PyResult<Bound<'py, PyAny>> {
    let d = cvtrust::noisy_measurement_density(&GaussianState::coherent(alpha), &spec.0).map_err(err)?;
    to_py(py, &d)
}

/// Outcome density of an ideal detector behind loss `eta_e`, scaled by `r`.
#[pyfunction]
fn rescaled_lossy_density<'py>(
    py: Python<'py>,
    alpha: Complex64,
    kind_name: &str,
    eta_e: f64,
    r: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let d = cvtrust::rescaled_lossy_density(&GaussianState::coherent(alpha), kind(kind_name)?, eta_e, r)
        .map_err(err)?;
    to_py(py, &d)
}

/// `(t_eff, xi_eff)` for a channel of transmittance `eta` and input excess
/// noise `xi0`.
#[pyfunction]
#[pyo3(signature = (eta, xi0, scenario, spec = None))]
fn scenario_params(eta: f64, xi0: f64, scenario: &str, spec: Option<&PyDetectorSpec>) -> PyResult<(f64, f64)> {
    let channel = ChannelSpec::new(eta, xi0).map_err(err)?;
    let scenario: Scenario = scenario.parse().map_err(err)?;
    let p = cvtrust::scenario_params(&channel, spec.map(|s| &s.0), scenario).map_err(err)?;
    Ok((p.t_eff, p.xi_eff))
}

/// Summary of the analytic sweep over the default grid.
#[pyfunction]
#[pyo3(signature = (sabotage = None))]
fn analytic_sweep<'py>(py: Python<'py>, sabotage: Option<&str>) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = SweepConfig::default_grid();
    cfg.sabotage = parse_sabotage(sabotage)?;
    let report = py.detach(|| core_analytic(&cfg)).map_err(err)?;
    to_py(py, &report.summary)
}

/// Summary of the Monte-Carlo sweep over the reduced 32-cell grid.
#[pyfunction]
#[pyo3(signature = (mc_samples, seed, sabotage = None))]
fn monte_carlo_summary<'py>(
    py: Python<'py>,
    mc_samples: usize,
    seed: u64,
    sabotage: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = SweepConfig::monte_carlo_grid(mc_samples, seed);
    cfg.sabotage = parse_sabotage(sabotage)?;
    let report = py.detach(|| monte_carlo_sweep(&cfg)).map_err(err)?;
    to_py(py, &report.summary)
}

fn parse_sabotage(name: Option<&str>) -> PyResult<Sabotage> {
    match name {
        None | Some("none") => Ok(Sabotage::None),
        Some("skip-rescale") => Ok(Sabotage::SkipRescale),
        Some(other) => Err(err(format!("unknown sabotage '{other}'"))),
    }
}

/// Key-rate scan; returns the full table with config echo and metadata.
#[pyfunction]
#[pyo3(signature = (protocol, eta_d, nu, xi0, loss_db, scenarios = None))]
fn run_scan<'py>(
    py: Python<'py>,
    protocol: &str,
    eta_d: f64,
    nu: f64,
    xi0: f64,
    loss_db: (f64, f64, f64),
    scenarios: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyAny>> {
    let protocol = match protocol {
        "heterodyne" | "all-heterodyne" => ProtocolVariant::AllHeterodyne,
        "hybrid" => ProtocolVariant::Hybrid,
        other => return Err(err(format!("unknown protocol '{other}'"))),
    };
    let grid = loss_grid(loss_db.0, loss_db.1, loss_db.2).map_err(err)?;
    let mut cfg = ScanConfig::for_protocol(protocol, eta_d, nu, xi0, grid).map_err(err)?;
    if let Some(names) = scenarios {
        cfg.scenarios = names
            .iter()
            .map(|s| s.parse::<Scenario>())
            .collect::<Result<_, _>>()
            .map_err(err)?;
    }
    to_py(py, &core_run_scan(&cfg).map_err(err)?)
}

#[pymodule]
fn pycvtrust(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDetectorSpec>()?;
    m.add_class::<PyRescalePlan>()?;
    m.add_function(wrap_pyfunction!(rescale_plan, m)?)?;
    m.add_function(wrap_pyfunction!(rescale_plan_limit, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(harmonize, m)?)?;
    m.add_function(wrap_pyfunction!(noisy_density, m)?)?;
    m.add_function(wrap_pyfunction!(rescaled_lossy_density, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_params, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_summary, m)?)?;
    m.add_function(wrap_pyfunction!(run_scan, m)?)?;
    Ok(())
}
