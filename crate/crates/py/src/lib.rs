//! Python bindings: plans, the classical filter, the circuit simulation and
//! window diagnostics.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use specfilter::circuit::{self, Mode};
use specfilter::cli;
use specfilter::config::RunConfig;
use specfilter::evolution::PotentialSpec;
use specfilter::filter::{self as core_filter, FilterPlan, QuadratureRule, TrialSpec};
use specfilter::numerics::GridSpec;
use specfilter::windows::{self, Window};

fn to_py(err: specfilter::Error) -> PyErr {
    match cli::exit_code(&err) {
        2 => PyValueError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

fn window_of(kind: &str, steps: usize, sigma: f64) -> specfilter::Result<Window> {
    match kind {
        "rectangular" => Window::rectangular(steps),
        "hann" => Window::hann(steps),
        "gaussian" => Window::gaussian(steps, sigma),
        other => Err(specfilter::Error::InvalidArgument(format!("unknown window `{other}`"))),
    }
}

fn mode_of(mode: &str) -> specfilter::Result<Mode> {
    match mode {
        "deterministic" => Ok(Mode::Deterministic),
        "sampled" => Ok(Mode::Sampled),
        other => Err(specfilter::Error::InvalidArgument(format!("unknown mode `{other}`"))),
    }
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Filtering plan on a harmonic potential with a cos^2 trial state.
#[pyclass(name = "Plan", frozen)]
struct PyPlan {
    inner: FilterPlan,
    config: Option<RunConfig>,
}

#[pymethods]
impl PyPlan {
    #[new]
    #[pyo3(signature = (length, points, final_time, steps, target_energy, window = "hann", trial_width = 10.0, sigma = 1.0 / 14.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        length: f64,
        points: usize,
        final_time: f64,
        steps: usize,
        target_energy: f64,
        window: &str,
        trial_width: f64,
        sigma: f64,
    ) -> PyResult<Self> {
        let build = || -> specfilter::Result<FilterPlan> {
            let grid = GridSpec::new(length, points)?;
            FilterPlan::new(
                PotentialSpec::harmonic(&grid),
                TrialSpec::cos2(trial_width)?,
                target_energy,
                final_time,
                window_of(window, steps, sigma)?,
                QuadratureRule::trapezoidal(steps)?,
            )
        };
        Ok(Self {
            inner: build().map_err(to_py)?,
            config: None,
        })
    }

    /// Plan described by a `key = value` run configuration.
    #[staticmethod]
    fn from_config(path: PathBuf) -> PyResult<Self> {
        let cfg = RunConfig::load(&path).map_err(to_py)?;
        let inner = cfg.plan().map_err(to_py)?;
        Ok(Self {
            inner,
            config: Some(cfg),
        })
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    #[getter]
    fn final_time(&self) -> f64 {
        self.inner.final_time()
    }

    #[getter]
    fn target_energy(&self) -> f64 {
        self.inner.target_energy()
    }

    #[getter]
    fn window(&self) -> &'static str {
        self.inner.window().kind().name()
    }

    fn positions(&self) -> Vec<f64> {
        self.inner.grid().positions()
    }

    fn coefficients(&self) -> Vec<Complex64> {
        self.inner.coefficients()
    }

    fn trial_state(&self) -> PyResult<Vec<Complex64>> {
        Ok(self.inner.trial_state().map_err(to_py)?.into_amplitudes())
    }

    /// Normalized filtered state from the classical sum.
    fn classical_filter<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let out = core_filter::classical_filter(&self.inner).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("norm_sqr", out.norm_sqr)?;
        d.set_item("state", out.normalized.into_amplitudes())?;
        Ok(d)
    }

    /// Gate-by-gate circuit simulation.
    #[pyo3(signature = (mode = "deterministic", seed = 0, max_restarts = 1000))]
    fn run_circuit<'py>(
        &self,
        py: Python<'py>,
        mode: &str,
        seed: u64,
        max_restarts: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mode = mode_of(mode).map_err(to_py)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = circuit::run_circuit(&self.inner, mode, Some(&mut rng), max_restarts).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("p_rho", r.p_rho)?;
        d.set_item("p_success", r.p_success)?;
        d.set_item("p_total", r.p_total)?;
        d.set_item("restarts", r.stats.map(|s| s.restarts()))?;
        d.set_item("state", r.state.into_amplitudes())?;
        Ok(d)
    }

    /// Full filter report as a dict; requires a plan built from a configuration.
    #[pyo3(signature = (seed = 0))]
    fn report<'py>(&self, py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let cfg = self
            .config
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("report needs a plan loaded with Plan.from_config"))?;
        let (report, _) = cli::filter_report(cfg, &self.inner, seed).map_err(to_py)?;
        let text = serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        json_to_py(py, &text)
    }
}

/// SVD factors of the filter gate for coefficient `b`.
#[pyfunction]
fn gate_factors<'py>(py: Python<'py>, b: Complex64) -> PyResult<Bound<'py, PyDict>> {
    let f = circuit::gate_factors(b);
    let rows = |m: circuit::Mat2| m.iter().map(|r| r.to_vec()).collect::<Vec<_>>();
    let d = PyDict::new(py);
    d.set_item("prefactor", f.prefactor)?;
    d.set_item("singular_value", f.singular_value)?;
    d.set_item("theta", f.theta)?;
    d.set_item("u", rows(f.u))?;
    d.set_item("v_dagger", rows(f.v_dagger))?;
    d.set_item("target", rows(f.target()))?;
    d.set_item("reconstructed", rows(f.reconstruct()))?;
    d.set_item("p1_bound", circuit::p1_bound(b))?;
    Ok(d)
}

/// Lower bound on the probability that all `steps + 1` gates succeed.
#[pyfunction]
fn success_probability_bound(steps: usize) -> f64 {
    circuit::success_probability_bound(steps)
}

#[pyfunction]
#[pyo3(signature = (kind, steps, sigma = 1.0 / 14.0))]
fn window_values(kind: &str, steps: usize, sigma: f64) -> PyResult<Vec<f64>> {
    Ok(window_of(kind, steps, sigma).map_err(to_py)?.values().to_vec())
}

/// Coherent gain, width and suppression of a window's line shape.
#[pyfunction]
#[pyo3(signature = (kind, steps, final_time, sigma = 1.0 / 14.0, exclusion = None))]
fn analyze_window<'py>(
    py: Python<'py>,
    kind: &str,
    steps: usize,
    final_time: f64,
    sigma: f64,
    exclusion: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let w = window_of(kind, steps, sigma).map_err(to_py)?;
    let rule = QuadratureRule::trapezoidal(steps).map_err(to_py)?;
    let r = windows::analyze(&w, &rule, final_time, exclusion).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("coherent_gain", r.coherent_gain)?;
    d.set_item("first_null", r.first_null)?;
    d.set_item("width", r.width)?;
    d.set_item("suppression", r.suppression)?;
    d.set_item("suppression_db", r.suppression_db)?;
    Ok(d)
}

#[pymodule]
fn specfilter_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPlan>()?;
    m.add_function(wrap_pyfunction!(gate_factors, m)?)?;
    m.add_function(wrap_pyfunction!(success_probability_bound, m)?)?;
    m.add_function(wrap_pyfunction!(window_values, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_window, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_map_to_windows_and_modes() {
        assert_eq!(window_of("hann", 16, 0.1).unwrap().kind().name(), "hann");
        assert!(window_of("kaiser", 16, 0.1).is_err());
        assert_eq!(mode_of("sampled").unwrap(), Mode::Sampled);
        assert!(mode_of("random").is_err());
    }
}
