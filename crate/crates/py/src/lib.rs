//! Python bindings: the model parameters, controller gains, closed-loop
//! simulation, stability predicates, matching checks and scenario runs.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dclag_core::cart_pendulum::{CartPendulum, ModelParameters};
use dclag_core::scenario::{self, parse_config};
use dclag_core::shaping::{ClosedLoopForce, ControllerGains, ShapingMode};
use dclag_core::stability::{damped_linear_map, kinetic_spectral_condition, verify_matching_equivalence, MatchingVariant};
use dclag_core::variational::{simulate_from_state, ConfigurationPoint, SolverSettings, Velocity};
use dclag_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::DegenerateGain(_) | Error::Config(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn mode_of(name: &str) -> PyResult<ShapingMode> {
    name.parse().map_err(to_py)
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Cart-pendulum parameters in SI units.
#[pyclass(name = "ModelParameters", frozen)]
struct PyModelParameters {
    inner: ModelParameters,
}

#[pymethods]
impl PyModelParameters {
    #[new]
    #[pyo3(signature = (m=0.14, M=0.44, l=0.215, psi=0.0, g=9.81, h=0.05))]
    #[allow(non_snake_case)]
    fn new(m: f64, M: f64, l: f64, psi: f64, g: f64, h: f64) -> PyResult<Self> {
        Ok(Self {
            inner: ModelParameters::new(m, M, l, psi, g, h).map_err(to_py)?,
        })
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.time_step
    }

    #[getter]
    fn psi(&self) -> f64 {
        self.inner.incline
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }

    fn beta(&self, phi: f64) -> f64 {
        CartPendulum::new(self.inner).beta(phi)
    }

    /// Threshold gain above which kinetic shaping is spectrally stable.
    fn kappa_crit(&self) -> PyResult<f64> {
        Ok(kinetic_spectral_condition(&self.inner).map_err(to_py)?.kappa_crit)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "ModelParameters(m={}, M={}, l={}, psi={}, g={}, h={})",
            p.pendulum_mass, p.cart_mass, p.length, p.incline, p.gravity, p.time_step
        )
    }
}

/// Controller gains with matched kinetic parameters.
#[pyclass(name = "ControllerGains", frozen)]
struct PyControllerGains {
    inner: ControllerGains,
}

#[pymethods]
impl PyControllerGains {
    #[staticmethod]
    #[pyo3(signature = (params, kappa, p=0.0, dissipation=0.0))]
    fn kinetic(params: PyRef<'_, PyModelParameters>, kappa: f64, p: f64, dissipation: f64) -> PyResult<Self> {
        let inner = ControllerGains::kinetic(&params.inner, kappa, p).map_err(to_py)?;
        Ok(Self {
            inner: inner.with_dissipation(dissipation),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (params, kappa, p=0.0))]
    fn alternative(params: PyRef<'_, PyModelParameters>, kappa: f64, p: f64) -> PyResult<Self> {
        Ok(Self {
            inner: ControllerGains::alternative(&params.inner, kappa, p).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (params, kappa, rho, epsilon, dissipation=0.0))]
    fn potential(params: PyRef<'_, PyModelParameters>, kappa: f64, rho: f64, epsilon: f64, dissipation: f64) -> PyResult<Self> {
        let inner = ControllerGains::potential(&params.inner, kappa, rho, epsilon).map_err(to_py)?;
        Ok(Self {
            inner: inner.with_dissipation(dissipation),
        })
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    #[getter]
    fn dissipation(&self) -> f64 {
        self.inner.dissipation
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Simulates the discrete closed loop from `(q0, v0)` for `n` steps.
///
/// Returns a dict of equal-length lists `t, phi, s, u, p, E` with `None`
/// where a value is undefined.
#[pyfunction]
#[pyo3(signature = (params, gains, mode, q0, v0, n, tol=1e-10))]
fn simulate<'py>(
    py: Python<'py>,
    params: PyRef<'_, PyModelParameters>,
    gains: PyRef<'_, PyControllerGains>,
    mode: &str,
    q0: (f64, f64),
    v0: (f64, f64),
    n: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let model = CartPendulum::new(params.inner);
    let force = ClosedLoopForce::new(model, gains.inner, mode_of(mode)?).map_err(to_py)?;
    let settings = SolverSettings::default().with_tol(tol);
    let traj = py
        .detach(|| {
            simulate_from_state(
                &model.discrete_lagrangian(),
                &force,
                ConfigurationPoint::new(q0.0, q0.1),
                Velocity::new(v0.0, v0.1),
                n,
                &settings,
            )
        })
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("t", traj.times().collect::<Vec<_>>())?;
    out.set_item("phi", traj.phi())?;
    out.set_item("s", traj.s())?;
    out.set_item("u", traj.controls.clone())?;
    out.set_item("p", traj.momenta.clone())?;
    out.set_item("E", traj.energies.clone())?;
    Ok(out)
}

/// Spectral radius of the linearized closed loop.
#[pyfunction]
fn spectral_radius(params: PyRef<'_, PyModelParameters>, gains: PyRef<'_, PyControllerGains>, mode: &str) -> PyResult<f64> {
    Ok(damped_linear_map(&params.inner, &gains.inner, mode_of(mode)?)
        .map_err(to_py)?
        .spectral_radius())
}

/// Largest `(φ, s)` deviation between the closed loop and the controlled
/// Lagrangian dynamics. `variant` is one of `kinetic`, `alternative`,
/// `potential`, `potential-unforced`.
#[pyfunction]
#[pyo3(signature = (params, gains, variant, q0, q1, n, tol=1e-10))]
fn verify_matching(
    params: PyRef<'_, PyModelParameters>,
    gains: PyRef<'_, PyControllerGains>,
    variant: &str,
    q0: (f64, f64),
    q1: (f64, f64),
    n: usize,
    tol: f64,
) -> PyResult<(f64, f64)> {
    let variant = match variant {
        "kinetic" => MatchingVariant::Kinetic,
        "alternative" => MatchingVariant::Alternative,
        "potential" => MatchingVariant::Potential,
        "potential-unforced" => MatchingVariant::PotentialUnforced,
        other => return Err(PyValueError::new_err(format!("unknown matching variant `{other}`"))),
    };
    let dev = verify_matching_equivalence(
        &CartPendulum::new(params.inner),
        &gains.inner,
        variant,
        ConfigurationPoint::new(q0.0, q0.1),
        ConfigurationPoint::new(q1.0, q1.1),
        n,
        &SolverSettings::default().with_tol(tol),
    )
    .map_err(to_py)?;
    Ok((dev.phi, dev.s))
}

/// Runs a scenario from configuration text; returns its summary as a dict.
/// With `out_dir`, the CSV and JSON artifacts are written there too.
#[pyfunction]
#[pyo3(signature = (text, seed=0, out_dir=None))]
fn run_config<'py>(py: Python<'py>, text: &str, seed: u64, out_dir: Option<std::path::PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = parse_config(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    cfg.seed = seed;
    let outcome = py.detach(|| scenario::run_scenario(&cfg)).map_err(to_py)?;
    if let Some(dir) = out_dir {
        scenario::write_outputs(&outcome, &dir).map_err(to_py)?;
    }
    let json = serde_json::to_string(&outcome.summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &json)
}

/// Stability predicates of a configuration, as a dict.
#[pyfunction]
fn analyze_config<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = parse_config(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let analysis = scenario::analyze(&cfg).map_err(to_py)?;
    let json = serde_json::to_string(&analysis).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &json)
}

#[pymodule]
fn dclag(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParameters>()?;
    m.add_class::<PyControllerGains>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_radius, m)?)?;
    m.add_function(wrap_pyfunction!(verify_matching, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_config, m)?)?;
    Ok(())
}
