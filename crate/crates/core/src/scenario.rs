//! Scenario configuration, execution and output.
//!
//! A scenario is described by `key = value` lines (or one JSON object with the
//! same keys). Running it produces a [`Trajectory`], the force schedule for
//! the digital-controller modes, and a [`RunSummary`] with verdicts.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cart_pendulum::{CartPendulum, ModelParameters};
use crate::error::{Error, Result};
use crate::mpc::{causality_audit, run_digital_controller, ContinuousPlant, ControllerOptions, CycleStats, HeldForce, SensorNoise};
use crate::shaping::{ClosedLoopForce, ContinuousLaw, ControllerGains, ShapingMode};
use crate::stability::{
    damped_linear_map, kinetic_spectral_condition, potential_spectral_condition, verify_matching_equivalence,
    MatchingVariant,
};
use crate::variational::{
    initialize_from_state, replay_residual, step, ConfigurationPoint, DiscreteState, SolverSettings, Trajectory, Velocity,
};

/// A configuration parse error tied to a line and key.
#[derive(Debug, thiserror::Error)]
#[error("line {line}: {key}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, key: &str, message: impl Into<String>) -> Self {
        Self {
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }
}

/// What a scenario runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioMode {
    /// Discrete closed loop with the given shaping law.
    Shaping(ShapingMode),
    /// Digital controller with kinetic shaping on a continuous plant.
    MpcKinetic,
    /// Digital controller with potential shaping on a continuous plant.
    MpcPotential,
}

impl ScenarioMode {
    pub fn is_mpc(self) -> bool {
        matches!(self, ScenarioMode::MpcKinetic | ScenarioMode::MpcPotential)
    }

    pub fn is_potential(self) -> bool {
        match self {
            ScenarioMode::Shaping(m) => m.is_potential(),
            ScenarioMode::MpcKinetic => false,
            ScenarioMode::MpcPotential => true,
        }
    }

    /// Shaping law used, given the dissipation gain. The digital-controller
    /// modes switch damping on whenever `D ≠ 0`.
    pub fn shaping_mode(self, dissipation: f64) -> ShapingMode {
        match (self, dissipation != 0.0) {
            (ScenarioMode::Shaping(m), _) => m,
            (ScenarioMode::MpcKinetic, false) => ShapingMode::Kinetic,
            (ScenarioMode::MpcKinetic, true) => ShapingMode::KineticDissipative,
            (ScenarioMode::MpcPotential, false) => ShapingMode::Potential,
            (ScenarioMode::MpcPotential, true) => ShapingMode::PotentialDissipative,
        }
    }
}

impl fmt::Display for ScenarioMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioMode::Shaping(m) => write!(f, "{m}"),
            ScenarioMode::MpcKinetic => f.write_str("mpc-kinetic"),
            ScenarioMode::MpcPotential => f.write_str("mpc-potential"),
        }
    }
}

impl FromStr for ScenarioMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mpc-kinetic" => Ok(ScenarioMode::MpcKinetic),
            "mpc-potential" => Ok(ScenarioMode::MpcPotential),
            other => other.parse().map(ScenarioMode::Shaping).map_err(|_| {
                format!("unknown mode `{other}` (expected kinetic, kinetic+diss, potential, potential+diss, mpc-kinetic or mpc-potential)")
            }),
        }
    }
}

/// Validated scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub params: ModelParameters,
    pub mode: ScenarioMode,
    pub kappa: f64,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub dissipation: f64,
    /// Momentum level for the kinetic gains; taken from the initial data when absent.
    pub momentum_level: Option<f64>,
    pub q0: ConfigurationPoint,
    pub v0: Velocity,
    /// Number of steps (or control intervals).
    pub steps: usize,
    pub tol: f64,
    /// Standard deviation of additive sensing noise in the digital-controller modes.
    pub noise: f64,
    pub seed: u64,
}

/// Keys accepted in a configuration.
pub const CONFIG_KEYS: &[&str] = &[
    "m", "M", "l", "psi", "g", "h", "mode", "kappa", "rho", "epsilon", "D", "p", "phi0", "s0", "dphi0", "ds0", "N", "Tf",
    "tol", "noise",
];

/// Raw `key → (line, value)` entries.
type RawConfig = BTreeMap<String, (usize, String)>;

fn raw_from_text(text: &str) -> std::result::Result<RawConfig, ConfigError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return raw_from_json(trimmed);
    }
    let mut raw = RawConfig::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::new(line_no, content, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if !CONFIG_KEYS.contains(&key) {
            return Err(ConfigError::new(line_no, key, "unknown key"));
        }
        if let Some((first, _)) = raw.get(key) {
            return Err(ConfigError::new(line_no, key, format!("duplicate key, first set on line {first}")));
        }
        raw.insert(key.to_string(), (line_no, value.to_string()));
    }
    Ok(raw)
}

fn raw_from_json(text: &str) -> std::result::Result<RawConfig, ConfigError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ConfigError::new(e.line(), "<json>", e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| ConfigError::new(1, "<json>", "expected a single object"))?;
    let mut raw = RawConfig::new();
    for (key, v) in obj {
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::new(1, key, "unknown key"));
        }
        let text = match v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(ConfigError::new(1, key, format!("unsupported value {other}"))),
        };
        raw.insert(key.clone(), (1, text));
    }
    Ok(raw)
}

/// Parses and validates a configuration, filling defaults.
pub fn parse_config(text: &str) -> std::result::Result<ScenarioConfig, ConfigError> {
    parse_config_with(text, &[])
}

/// As [`parse_config`] with some keys replaced, as a parameter sweep does.
pub fn parse_config_with(text: &str, overrides: &[(&str, &str)]) -> std::result::Result<ScenarioConfig, ConfigError> {
    let mut raw = raw_from_text(text)?;
    for (key, value) in overrides {
        if !CONFIG_KEYS.contains(key) {
            return Err(ConfigError::new(0, key, "unknown key"));
        }
        let line = raw.get(*key).map_or(0, |(l, _)| *l);
        raw.insert(key.to_string(), (line, value.to_string()));
    }
    build(&raw)
}

fn number(raw: &RawConfig, key: &str) -> std::result::Result<Option<f64>, ConfigError> {
    match raw.get(key) {
        None => Ok(None),
        Some((line, v)) => {
            let x: f64 = v
                .parse()
                .map_err(|_| ConfigError::new(*line, key, format!("`{v}` is not a number")))?;
            if x.is_finite() {
                Ok(Some(x))
            } else {
                Err(ConfigError::new(*line, key, "must be finite"))
            }
        }
    }
}

fn line_of(raw: &RawConfig, key: &str) -> usize {
    raw.get(key).map_or(0, |(l, _)| *l)
}

fn build(raw: &RawConfig) -> std::result::Result<ScenarioConfig, ConfigError> {
    let defaults = ModelParameters::default();
    let get = |key: &str, default: f64| number(raw, key).map(|v| v.unwrap_or(default));

    let (mode_line, mode_text) = raw.get("mode").ok_or_else(|| ConfigError::new(0, "mode", "missing required key"))?;
    let mode: ScenarioMode = mode_text.parse().map_err(|e: String| ConfigError::new(*mode_line, "mode", e))?;

    let params = ModelParameters {
        pendulum_mass: get("m", defaults.pendulum_mass)?,
        cart_mass: get("M", defaults.cart_mass)?,
        length: get("l", defaults.length)?,
        incline: get("psi", 0.0)?,
        gravity: get("g", defaults.gravity)?,
        time_step: get("h", defaults.time_step)?,
    };
    params.validate().map_err(|e| ConfigError::new(0, "m, M, l, psi, g, h", e.to_string()))?;

    let kappa = number(raw, "kappa")?.ok_or_else(|| ConfigError::new(0, "kappa", "missing required key"))?;
    if kappa <= 0.0 {
        return Err(ConfigError::new(line_of(raw, "kappa"), "kappa", "must be positive"));
    }

    let (rho, epsilon) = (number(raw, "rho")?, number(raw, "epsilon")?);
    if mode.is_potential() {
        let rho = rho.ok_or_else(|| ConfigError::new(0, "rho", "missing required key for potential shaping"))?;
        if rho >= 0.0 {
            return Err(ConfigError::new(
                line_of(raw, "rho"),
                "rho",
                format!("potential shaping is stable only for ρ < 0, got {rho}"),
            ));
        }
        let eps = epsilon.ok_or_else(|| ConfigError::new(0, "epsilon", "missing required key for potential shaping"))?;
        if eps <= 0.0 {
            return Err(ConfigError::new(
                line_of(raw, "epsilon"),
                "epsilon",
                format!("the shaped potential needs ε > 0, got {eps}"),
            ));
        }
    }

    let h = params.time_step;
    let steps = match (number(raw, "N")?, number(raw, "Tf")?) {
        (None, None) => return Err(ConfigError::new(0, "N", "one of N or Tf is required")),
        (Some(n), tf) => {
            if n < 0.0 || n.fract() != 0.0 {
                return Err(ConfigError::new(line_of(raw, "N"), "N", "must be a non-negative integer"));
            }
            if let Some(tf) = tf {
                if (n * h - tf).abs() > 1e-9 * tf.abs().max(1.0) {
                    return Err(ConfigError::new(line_of(raw, "Tf"), "Tf", format!("N·h = {} differs from Tf = {tf}", n * h)));
                }
            }
            n as usize
        }
        (None, Some(tf)) => {
            let n = (tf / h).round();
            if tf < 0.0 || (n * h - tf).abs() > 1e-9 * tf.max(1.0) {
                return Err(ConfigError::new(line_of(raw, "Tf"), "Tf", format!("not a non-negative multiple of h = {h}")));
            }
            n as usize
        }
    };
    if mode.is_mpc() && steps < 5 {
        return Err(ConfigError::new(0, "Tf", "the digital controller needs Tf/h ≥ 5"));
    }

    let tol = get("tol", 1e-10)?;
    if tol <= 0.0 {
        return Err(ConfigError::new(line_of(raw, "tol"), "tol", "must be positive"));
    }
    let noise = get("noise", 0.0)?;
    if noise < 0.0 {
        return Err(ConfigError::new(line_of(raw, "noise"), "noise", "must be non-negative"));
    }

    Ok(ScenarioConfig {
        params,
        mode,
        kappa,
        rho,
        epsilon,
        dissipation: get("D", 0.0)?,
        momentum_level: number(raw, "p")?,
        q0: ConfigurationPoint::new(get("phi0", 0.1)?, get("s0", 0.0)?),
        v0: Velocity::new(get("dphi0", 0.0)?, get("ds0", 0.0)?),
        steps,
        tol,
        noise,
        seed: 0,
    })
}

impl ScenarioConfig {
    pub fn model(&self) -> CartPendulum {
        CartPendulum::new(self.params)
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings::default().with_tol(self.tol)
    }

    pub fn shaping_mode(&self) -> ShapingMode {
        self.mode.shaping_mode(self.dissipation)
    }

    /// Gains for the configured mode; `p` is the momentum level used for the
    /// kinetic matching parameters.
    pub fn gains(&self, p: f64) -> Result<ControllerGains> {
        let g = if self.mode.is_potential() {
            let (rho, eps) = (self.rho.unwrap_or(f64::NAN), self.epsilon.unwrap_or(f64::NAN));
            ControllerGains::potential(&self.params, self.kappa, rho, eps)?
        } else {
            ControllerGains::kinetic(&self.params, self.kappa, p)?
        };
        Ok(g.with_dissipation(self.dissipation))
    }

    /// Normalized `key = value` listing with all defaults filled in.
    pub fn echo(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        line("mode", self.mode.to_string());
        line("m", p.pendulum_mass.to_string());
        line("M", p.cart_mass.to_string());
        line("l", p.length.to_string());
        line("psi", p.incline.to_string());
        line("g", p.gravity.to_string());
        line("h", p.time_step.to_string());
        line("kappa", self.kappa.to_string());
        if let Some(rho) = self.rho {
            line("rho", rho.to_string());
        }
        if let Some(eps) = self.epsilon {
            line("epsilon", eps.to_string());
        }
        line("D", self.dissipation.to_string());
        if let Some(pl) = self.momentum_level {
            line("p", pl.to_string());
        }
        line("phi0", self.q0.phi.to_string());
        line("s0", self.q0.s.to_string());
        line("dphi0", self.v0.phi.to_string());
        line("ds0", self.v0.s.to_string());
        line("N", self.steps.to_string());
        line("tol", self.tol.to_string());
        line("noise", self.noise.to_string());
        if let Ok(cond) = kinetic_spectral_condition(&self.params) {
            line("# kappa_crit", cond.kappa_crit.to_string());
        }
        out
    }
}

/// One named pass/fail check of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        }
    }
}

/// A solver failure during a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub step: usize,
    pub message: String,
}

/// Stability predicates of a configuration, without simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityAnalysis {
    pub kappa_crit: f64,
    pub sigma: f64,
    pub spectral_radius: f64,
    /// Eigenvalues of the quadratic energy form (potential modes).
    pub energy_eigenvalues: Option<Vec<f64>>,
    pub verdicts: Vec<Verdict>,
}

impl StabilityAnalysis {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Stability predicates for the configured mode.
pub fn analyze(config: &ScenarioConfig) -> Result<StabilityAnalysis> {
    let gains = config.gains(config.momentum_level.unwrap_or(0.0))?;
    let mode = config.shaping_mode();
    let kinetic = kinetic_spectral_condition(&config.params)?;
    let map = damped_linear_map(&config.params, &gains, mode)?;
    let radius = map.spectral_radius();

    let mut verdicts = Vec::new();
    let mut energy_eigenvalues = None;
    if config.mode.is_potential() {
        let cert = potential_spectral_condition(&config.params, &gains)?;
        verdicts.push(Verdict::new(
            "stability_condition",
            cert.holds(),
            format!(
                "σ in window: {}, ρ < 0: {}, V_ε concave: {}",
                cert.sigma_in_window, cert.rho_negative, cert.shaped_potential_concave
            ),
        ));
        energy_eigenvalues = Some(cert.energy_eigenvalues);
    } else {
        verdicts.push(Verdict::new(
            "stability_condition",
            kinetic.holds(config.kappa),
            format!("κ = {} against κ_crit = {}", config.kappa, kinetic.kappa_crit),
        ));
    }
    if mode.is_dissipative() {
        verdicts.push(Verdict::new("linear_spectrum", radius < 1.0, format!("spectral radius {radius} < 1")));
    } else {
        verdicts.push(Verdict::new(
            "linear_spectrum",
            map.on_unit_circle(1e-8),
            format!("spectral radius {radius} on the unit circle"),
        ));
    }
    Ok(StabilityAnalysis {
        kappa_crit: kinetic.kappa_crit,
        sigma: gains.sigma,
        spectral_radius: radius,
        energy_eigenvalues,
        verdicts,
    })
}

/// Summary of a scenario run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: String,
    pub steps: usize,
    pub final_phi_abs: f64,
    pub final_s_abs: f64,
    pub max_phi_abs: f64,
    /// Largest forced DEL residual along the run (discrete modes).
    pub max_residual: Option<f64>,
    /// Drift of the conserved momentum (kinetic discrete modes).
    pub momentum_drift: Option<f64>,
    pub energy_band: Option<f64>,
    pub kappa_crit: f64,
    pub spectral_radius: f64,
    /// Largest deviation from the controlled-Lagrangian dynamics (conservative discrete modes).
    pub matching_deviation: Option<f64>,
    pub cycle_stats: Option<CycleStats>,
    pub failure: Option<RunFailure>,
    pub verdicts: Vec<Verdict>,
}

impl RunSummary {
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.verdicts.iter().all(|v| v.pass)
    }
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub config: ScenarioConfig,
    pub trajectory: Trajectory,
    /// Held forces of the digital-controller modes.
    pub schedule: Option<Vec<HeldForce>>,
    pub summary: RunSummary,
}

/// Runs a scenario. Solver failures are reported in the summary, together
/// with the part of the trajectory computed before them.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let model = config.model();
    let settings = config.settings();
    let analysis = analyze(config)?;
    let mut verdicts = analysis.verdicts.clone();

    let (trajectory, schedule, failure, max_residual, momentum_drift, matching, cycle_stats) = if config.mode.is_mpc() {
        let gains = config.gains(config.momentum_level.unwrap_or(0.0))?;
        let law = ContinuousLaw::new(model, gains, config.shaping_mode())?;
        let options = ControllerOptions {
            settings,
            noise: (config.noise > 0.0).then_some(SensorNoise {
                std_dev: config.noise,
                seed: config.seed,
            }),
            ..ControllerOptions::default()
        };
        let t_final = config.steps as f64 * config.params.time_step;
        let make_plant = || ContinuousPlant::new(model, config.q0, config.v0);
        match run_digital_controller(&mut make_plant(), &law, t_final, &options) {
            Ok(run) => {
                let stats = run.cycle_stats();
                verdicts.push(Verdict::new(
                    "real_time",
                    stats.real_time,
                    format!("mean two-solve time {:.3e} s against h = {} s", stats.mean, run.h),
                ));
                let cutoff = config.steps / 2;
                let causal = causality_audit(make_plant, &law, t_final, cutoff, &options)?;
                verdicts.push(Verdict::new("causality", causal, format!("samples after index {cutoff} corrupted")));
                (run.trajectory(), Some(run.schedule), None, None, None, None, Some(stats))
            }
            Err(e) => {
                let failure = failure_of(&e);
                let traj = Trajectory {
                    h: config.params.time_step,
                    points: vec![config.q0],
                    controls: vec![None],
                    momenta: vec![None],
                    energies: vec![None],
                };
                (traj, None, Some(failure), None, None, None, None)
            }
        }
    } else {
        run_discrete(config, &model, &settings)?
    };

    let last = trajectory.last();
    let summary = RunSummary {
        mode: config.mode.to_string(),
        steps: trajectory.steps(),
        final_phi_abs: last.phi.abs(),
        final_s_abs: last.s.abs(),
        max_phi_abs: trajectory.points.iter().map(|q| q.phi.abs()).fold(0.0, f64::max),
        max_residual,
        momentum_drift,
        energy_band: trajectory.energy_band(),
        kappa_crit: analysis.kappa_crit,
        spectral_radius: analysis.spectral_radius,
        matching_deviation: matching,
        cycle_stats,
        failure,
        verdicts,
    };
    Ok(ScenarioOutcome {
        config: config.clone(),
        trajectory,
        schedule,
        summary,
    })
}

type DiscreteParts = (
    Trajectory,
    Option<Vec<HeldForce>>,
    Option<RunFailure>,
    Option<f64>,
    Option<f64>,
    Option<f64>,
    Option<CycleStats>,
);

fn failure_of(e: &Error) -> RunFailure {
    let step = match e {
        Error::StepFailed { step, .. } => *step,
        _ => 0,
    };
    RunFailure {
        step,
        message: e.to_string(),
    }
}

fn run_discrete(config: &ScenarioConfig, model: &CartPendulum, settings: &SolverSettings) -> Result<DiscreteParts> {
    let ld = model.discrete_lagrangian();
    let mode = config.shaping_mode();
    let n = config.steps;
    let h = config.params.time_step;

    // Kinetic gains depend on the momentum level only through μ; the force
    // itself does not, so the first step can be solved with any level.
    let provisional = ClosedLoopForce::new(*model, config.gains(0.0)?, mode)?;
    let mut points = vec![config.q0];
    let mut failure = None;
    if n > 0 {
        match initialize_from_state(&ld, &provisional, config.q0, config.v0, settings) {
            Ok(q1) => points.push(q1),
            Err(e) => failure = Some(failure_of(&e.at_step(0))),
        }
    }
    let level = match (config.momentum_level, points.get(1)) {
        (Some(p), _) => p,
        (None, Some(&q1)) => crate::shaping::controlled_momentum(model, config.kappa, config.q0, q1),
        (None, None) => 0.0,
    };
    let gains = config.gains(level)?;
    let force = ClosedLoopForce::new(*model, gains, mode)?;

    if points.len() == 2 {
        let mut state = DiscreteState::new(points[0], points[1], 1);
        while points.len() < n + 1 {
            match step(&ld, &force, &state, settings) {
                Ok(next) => {
                    points.push(next);
                    state = state.advance(next);
                }
                Err(e) => {
                    failure = Some(failure_of(&e.at_step(state.k)));
                    break;
                }
            }
        }
    }

    let max_residual = (points.len() >= 3).then(|| replay_residual(&ld, &force, &points));
    let trajectory = Trajectory::record(&ld, &force, points);

    let momentum_drift = if config.mode.is_potential() {
        None
    } else {
        let conserved: Vec<f64> = trajectory
            .momenta
            .iter()
            .zip(trajectory.points.windows(2))
            .filter_map(|(p, w)| p.map(|p| p - config.dissipation * 0.5 * (w[0].phi + w[1].phi) / h))
            .collect();
        conserved
            .first()
            .map(|first| conserved.iter().map(|p| (p - first).abs()).fold(0.0, f64::max))
    };

    let matching = if failure.is_none() && trajectory.points.len() >= 3 && !mode.is_dissipative() {
        let variant = if mode.is_potential() { MatchingVariant::Potential } else { MatchingVariant::Kinetic };
        let pts = &trajectory.points;
        let k = (pts.len() - 1).min(200);
        verify_matching_equivalence(model, &gains, variant, pts[0], pts[1], k, settings)
            .ok()
            .map(|d| d.phi.max(d.s))
    } else {
        None
    };

    Ok((trajectory, None, failure, max_residual, momentum_drift, matching, None))
}

/// Writes `k,t,phi,s,u,p_k,E`, one row per node, with empty cells for absent values.
pub fn write_csv(trajectory: &Trajectory, path: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io(e.into()))?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    w.write_record(["k", "t", "phi", "s", "u", "p_k", "E"]).map_err(|e| io(e.into()))?;
    for (k, (q, t)) in trajectory.points.iter().zip(trajectory.times()).enumerate() {
        w.write_record([
            k.to_string(),
            t.to_string(),
            q.phi.to_string(),
            q.s.to_string(),
            cell(trajectory.controls[k]),
            cell(trajectory.momenta[k]),
            cell(trajectory.energies[k]),
        ])
        .map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

/// Writes `interval_start_time,u_held`.
pub fn write_force_csv(schedule: &[HeldForce], path: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io(e.into()))?;
    w.write_record(["interval_start_time", "u_held"]).map_err(|e| io(e.into()))?;
    for f in schedule {
        w.write_record([f.start.to_string(), f.u.to_string()]).map_err(|e| io(e.into()))?;
    }
    w.flush().map_err(io)
}

/// Paths written by [`write_outputs`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFiles {
    pub trajectory: PathBuf,
    pub forces: Option<PathBuf>,
    pub summary: PathBuf,
    pub config: PathBuf,
}

/// Writes `trajectory.csv`, `forces.csv` (digital-controller modes),
/// `summary.json` and the echoed `config.txt` into `dir`.
pub fn write_outputs(outcome: &ScenarioOutcome, dir: &Path) -> Result<OutputFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let files = OutputFiles {
        trajectory: dir.join("trajectory.csv"),
        forces: outcome.schedule.as_ref().map(|_| dir.join("forces.csv")),
        summary: dir.join("summary.json"),
        config: dir.join("config.txt"),
    };
    write_csv(&outcome.trajectory, &files.trajectory)?;
    if let (Some(schedule), Some(path)) = (&outcome.schedule, &files.forces) {
        write_force_csv(schedule, path)?;
    }
    let json = serde_json::to_string_pretty(&outcome.summary).expect("summary serializes");
    let write = |path: &Path, text: String| {
        fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    };
    write(&files.summary, json + "\n")?;
    write(&files.config, outcome.config.echo())?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_filled() {
        let cfg = parse_config("mode = kinetic\nkappa = 12\nN = 10\n").unwrap();
        assert_eq!(cfg.params, ModelParameters::default());
        assert_eq!(cfg.tol, 1e-10);
        assert_eq!(cfg.q0, ConfigurationPoint::new(0.1, 0.0));
        assert!(cfg.echo().contains("kappa_crit"));
    }

    #[test]
    fn mode_names_round_trip() {
        for name in ["kinetic", "kinetic+diss", "potential", "potential+diss", "mpc-kinetic", "mpc-potential"] {
            assert_eq!(name.parse::<ScenarioMode>().unwrap().to_string(), name);
        }
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = parse_config("# header\n\nmode = kinetic # trailing\nkappa=12\nTf = 1.0\n").unwrap();
        assert_eq!(cfg.steps, 20);
    }

    #[test]
    fn json_document() {
        let cfg = parse_config(r#"{"mode": "potential", "kappa": 20, "rho": -0.02, "epsilon": 1e-5, "N": 4, "psi": 0.3}"#).unwrap();
        assert_eq!(cfg.rho, Some(-0.02));
        assert_eq!(cfg.steps, 4);
    }

    #[test]
    fn inconsistent_horizon() {
        let err = parse_config("mode = kinetic\nkappa = 12\nN = 10\nTf = 2\n").unwrap_err();
        assert_eq!(err.key, "Tf");
    }
}
