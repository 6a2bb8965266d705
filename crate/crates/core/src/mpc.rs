//! Digital model-predictive controller with zero-order hold.
//!
//! At each sample instant the controller senses the plant, predicts the next
//! two configurations with the forced discrete Euler–Lagrange equations of the
//! closed loop, and evaluates the continuous feedback law at the midpoint of
//! the predicted step. The resulting force is held constant over the interval
//! that starts one sample later, so the force on `[kh, (k+1)h]` depends only on
//! data sensed at or before `(k−1)h`.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cart_pendulum::CartPendulum;
use crate::error::{Error, Result};
use crate::shaping::ContinuousLaw;
use crate::variational::{
    initialize_from_state, step, ConfigurationPoint, ContinuousLagrangian, Covector, DiscreteForce, DiscreteLagrangian,
    DiscreteState, MidpointLagrangian, SolverSettings, Trajectory, Velocity,
};

/// The controlled system as seen by the controller: it can be sensed and
/// driven for one control interval with a constant cart force.
pub trait Plant {
    fn position(&self) -> ConfigurationPoint;

    /// Length of one control interval.
    fn interval(&self) -> f64;

    /// Advances the plant by one control interval with the cart force held at `u`.
    fn hold(&mut self, u: f64) -> Result<()>;

    /// Cart momentum, when the plant can report it.
    fn momentum(&self) -> Option<f64> {
        None
    }

    fn energy(&self) -> Option<f64> {
        None
    }
}

/// Continuous cart-pendulum integrated with classical RK4 on a fine grid.
#[derive(Clone, Debug)]
pub struct ContinuousPlant {
    pub model: CartPendulum,
    pub q: ConfigurationPoint,
    pub v: Velocity,
    pub substeps: usize,
}

impl ContinuousPlant {
    /// Plant at `(q0, v0)` using 50 substeps per control interval.
    pub fn new(model: CartPendulum, q0: ConfigurationPoint, v0: Velocity) -> Self {
        Self {
            model,
            q: q0,
            v: v0,
            substeps: 50,
        }
    }

    fn rk4(&self, q: ConfigurationPoint, v: Velocity, u: f64, dt: f64) -> (ConfigurationPoint, Velocity) {
        let f = |q: ConfigurationPoint, v: Velocity| (v, self.model.acceleration(q, v, u));
        let (k1q, k1v) = f(q, v);
        let (k2q, k2v) = f(q.displaced(k1q, 0.5 * dt), v + k1v * (0.5 * dt));
        let (k3q, k3v) = f(q.displaced(k2q, 0.5 * dt), v + k2v * (0.5 * dt));
        let (k4q, k4v) = f(q.displaced(k3q, dt), v + k3v * dt);
        let dq = (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * (dt / 6.0);
        let dv = (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
        (q.displaced(dq, 1.0), v + dv)
    }
}

impl Plant for ContinuousPlant {
    fn position(&self) -> ConfigurationPoint {
        self.q
    }

    fn interval(&self) -> f64 {
        self.model.h()
    }

    fn hold(&mut self, u: f64) -> Result<()> {
        if !u.is_finite() {
            return Err(Error::InvalidArgument("held force is not finite".into()));
        }
        let dt = self.model.h() / self.substeps as f64;
        for _ in 0..self.substeps {
            (self.q, self.v) = self.rk4(self.q, self.v, u, dt);
        }
        if self.q.is_finite() && self.v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument("plant state left the finite range".into()))
        }
    }

    fn momentum(&self) -> Option<f64> {
        Some(self.model.dv(self.q, self.v).s)
    }

    fn energy(&self) -> Option<f64> {
        Some(ContinuousLagrangian::energy(&self.model, self.q, self.v))
    }
}

/// Forces on the two neighbouring intervals of a node, each held constant.
#[derive(Clone, Copy, Debug)]
struct HeldPair {
    h: f64,
    before: f64,
    after: f64,
}

impl DiscreteForce for HeldPair {
    fn f1(&self, _: ConfigurationPoint, _: ConfigurationPoint) -> Covector {
        Covector::new(0.0, 0.5 * self.h * self.after)
    }
    fn f2(&self, _: ConfigurationPoint, _: ConfigurationPoint) -> Covector {
        Covector::new(0.0, 0.5 * self.h * self.before)
    }
}

/// The discrete model itself used as the plant, with held forces entering as
/// `(0, h·u/2)` in each slot. With this plant the controller's predictions
/// coincide with the samples.
#[derive(Clone, Debug)]
pub struct VariationalPlant {
    pub model: CartPendulum,
    pub settings: SolverSettings,
    v0: Velocity,
    prev: Option<ConfigurationPoint>,
    curr: ConfigurationPoint,
    last_force: f64,
}

impl VariationalPlant {
    pub fn new(model: CartPendulum, q0: ConfigurationPoint, v0: Velocity, settings: SolverSettings) -> Self {
        Self {
            model,
            settings,
            v0,
            prev: None,
            curr: q0,
            last_force: 0.0,
        }
    }
}

impl Plant for VariationalPlant {
    fn position(&self) -> ConfigurationPoint {
        self.curr
    }

    fn interval(&self) -> f64 {
        self.model.h()
    }

    fn hold(&mut self, u: f64) -> Result<()> {
        let ld = self.model.discrete_lagrangian();
        let force = HeldPair {
            h: self.model.h(),
            before: self.last_force,
            after: u,
        };
        let next = match self.prev {
            None => initialize_from_state(&ld, &force, self.curr, self.v0, &self.settings)?,
            Some(prev) => step(&ld, &force, &DiscreteState::new(prev, self.curr, 0), &self.settings)?,
        };
        self.prev = Some(self.curr);
        self.curr = next;
        self.last_force = u;
        Ok(())
    }

    fn momentum(&self) -> Option<f64> {
        let ld = self.model.discrete_lagrangian();
        self.prev.map(|p| ld.d2(p, self.curr).s)
    }

    fn energy(&self) -> Option<f64> {
        let ld = self.model.discrete_lagrangian();
        self.prev.and_then(|p| ld.discrete_energy(p, self.curr))
    }
}

/// `u` evaluated at the midpoint of `(q_a, q_b)` with velocity `(q_b − q_a)/h`.
pub fn held_force_control(law: &ContinuousLaw, qa: ConfigurationPoint, qb: ConfigurationPoint, h: f64) -> f64 {
    law.force(qa.midpoint(qb), qa.velocity_to(qb, h))
}

/// Discrete force of the prediction model: `(0, (h/2)·u)` per slot, with `u`
/// from [`held_force_control`]. Each slot can be switched off to represent
/// intervals on which the plant is known to be unforced.
#[derive(Clone, Copy, Debug)]
struct PredictionForce<'a> {
    law: &'a ContinuousLaw,
    h: f64,
    before: bool,
    after: bool,
}

impl PredictionForce<'_> {
    fn slot(&self, on: bool, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector {
        if on {
            Covector::new(0.0, 0.5 * self.h * held_force_control(self.law, q0, q1, self.h))
        } else {
            Covector::ZERO
        }
    }
}

impl DiscreteForce for PredictionForce<'_> {
    fn f1(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector {
        self.slot(self.after, q0, q1)
    }
    fn f2(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector {
        self.slot(self.before, q0, q1)
    }
}

/// Position of a prediction in the controller's start-up sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControllerPhase {
    /// First prediction, from `q(0)` and `q(h)`: the plant is unforced on both
    /// known intervals and on the first predicted one.
    StartupFirst,
    /// Second prediction, from `q(h)` and `q(2h)`: only the predicted
    /// intervals carry the law.
    StartupSecond,
    Steady,
}

impl ControllerPhase {
    /// Phase of the prediction producing the force held on `[kh, (k+1)h]`.
    pub fn for_interval(k: usize) -> Self {
        match k {
            0..=2 => ControllerPhase::StartupFirst,
            3 => ControllerPhase::StartupSecond,
            _ => ControllerPhase::Steady,
        }
    }

    /// Which of the three intervals around the two predictions carry forces:
    /// the sensed one, the first predicted and the second predicted.
    fn forced_intervals(self) -> [bool; 3] {
        match self {
            ControllerPhase::StartupFirst => [false, false, true],
            ControllerPhase::StartupSecond => [false, true, true],
            ControllerPhase::Steady => [true, true, true],
        }
    }
}

/// Two successive forced solves from sensed `(q_{k−2}, q_{k−1})`: returns the
/// predictions `(q̄_k, q̄_{k+1})`.
pub fn forward_estimate(
    model: &CartPendulum,
    law: &ContinuousLaw,
    sensed_prev: ConfigurationPoint,
    sensed_curr: ConfigurationPoint,
    phase: ControllerPhase,
    settings: &SolverSettings,
) -> Result<(ConfigurationPoint, ConfigurationPoint)> {
    let ld: MidpointLagrangian<CartPendulum> = model.discrete_lagrangian();
    let h = model.h();
    let [sensed, first, second] = phase.forced_intervals();
    let force = |before, after| PredictionForce { law, h, before, after };

    let state = DiscreteState::new(sensed_prev, sensed_curr, 0);
    let q_k = step(&ld, &force(sensed, first), &state, settings)?;
    let q_next = step(&ld, &force(first, second), &state.advance(q_k), settings)?;
    Ok((q_k, q_next))
}

/// Additive Gaussian sensing noise, reproducible from its seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorNoise {
    pub std_dev: f64,
    pub seed: u64,
}

/// Options of a controller run.
#[derive(Clone, Debug, Default)]
pub struct ControllerOptions {
    pub settings: SolverSettings,
    pub noise: Option<SensorNoise>,
    /// Replace every sensed sample after this index by garbage. Used to audit
    /// that earlier forces never look ahead.
    pub corrupt_after: Option<usize>,
    /// Artificial delay inside the timed prediction, for instrumentation tests.
    pub injected_delay: Option<Duration>,
}

/// Force held on `[start, start + h]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeldForce {
    pub start: f64,
    pub u: f64,
}

/// Predictions made at one sample instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Interval index `k` of the resulting force.
    pub k: usize,
    pub phase: ControllerPhase,
    pub current: ConfigurationPoint,
    pub next: ConfigurationPoint,
}

/// Record of a completed controller run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DigitalControllerRun {
    pub h: f64,
    /// True plant configurations at `t = kh`, `k = 0..=N`.
    pub samples: Vec<ConfigurationPoint>,
    /// What the controller saw; equals `samples` without noise.
    pub sensed: Vec<ConfigurationPoint>,
    pub momenta: Vec<Option<f64>>,
    pub energies: Vec<Option<f64>>,
    /// One entry per control interval, `N` in total.
    pub schedule: Vec<HeldForce>,
    pub predictions: Vec<Prediction>,
    /// Wall time of the two forward solves, seconds, one per prediction.
    pub cycle_times: Vec<f64>,
}

impl DigitalControllerRun {
    /// Plant samples as a trajectory; `controls[k]` is the force held on
    /// `[kh, (k+1)h]`.
    pub fn trajectory(&self) -> Trajectory {
        let n = self.samples.len();
        let mut controls: Vec<Option<f64>> = self.schedule.iter().map(|f| Some(f.u)).collect();
        controls.resize(n, None);
        Trajectory {
            h: self.h,
            points: self.samples.clone(),
            controls,
            momenta: self.momenta.clone(),
            energies: self.energies.clone(),
        }
    }

    pub fn cycle_stats(&self) -> CycleStats {
        measure_cycle_time(self)
    }
}

/// Runs the controller on `plant` until `t_final`.
///
/// The plant is unforced on `[0, 2h]`. At each sample `t = jh` with
/// `1 ≤ j ≤ N−2` the controller predicts from `(q_{j−1}, q_j)` and schedules
/// the force for `[(j+1)h, (j+2)h]`; then the plant runs through `[jh, (j+1)h]`
/// with the force scheduled earlier.
pub fn run_digital_controller<P: Plant>(
    plant: &mut P,
    law: &ContinuousLaw,
    t_final: f64,
    options: &ControllerOptions,
) -> Result<DigitalControllerRun> {
    let mut run = new_run(plant, law, t_final, options)?;
    drive(plant, law, options, &mut run)?;
    Ok(run)
}

fn new_run<P: Plant>(plant: &P, law: &ContinuousLaw, t_final: f64, options: &ControllerOptions) -> Result<DigitalControllerRun> {
    let h = law.model.h();
    if (plant.interval() - h).abs() > 1e-12 * h {
        return Err(Error::InvalidArgument("plant and model time steps differ".into()));
    }
    let n = interval_count(t_final, h)?;
    options.settings.validate()?;
    Ok(DigitalControllerRun {
        h,
        samples: Vec::with_capacity(n + 1),
        sensed: Vec::with_capacity(n + 1),
        momenta: Vec::with_capacity(n + 1),
        energies: Vec::with_capacity(n + 1),
        schedule: (0..n).map(|k| HeldForce { start: k as f64 * h, u: 0.0 }).collect(),
        predictions: Vec::new(),
        cycle_times: Vec::new(),
    })
}

/// The event loop. Fills `run` as it goes, so a failure leaves everything
/// decided before it in place.
fn drive<P: Plant>(plant: &mut P, law: &ContinuousLaw, options: &ControllerOptions, run: &mut DigitalControllerRun) -> Result<()> {
    let model = law.model;
    let h = run.h;
    let n = run.schedule.len();
    let mut noise = match options.noise {
        Some(cfg) => {
            let dist = Normal::new(0.0, cfg.std_dev)
                .map_err(|e| Error::InvalidArgument(format!("noise standard deviation: {e}")))?;
            Some((dist, ChaCha8Rng::seed_from_u64(cfg.seed)))
        }
        None => None,
    };

    for j in 0..=n {
        let truth = plant.position();
        let mut seen = truth;
        if let Some((dist, rng)) = noise.as_mut() {
            seen = ConfigurationPoint::new(truth.phi + dist.sample(rng), truth.s + dist.sample(rng));
        }
        if options.corrupt_after.is_some_and(|c| j > c) {
            seen = ConfigurationPoint::new(seen.phi + 0.5, seen.s - 0.5);
        }
        run.samples.push(truth);
        run.sensed.push(seen);
        run.momenta.push(plant.momentum());
        run.energies.push(plant.energy());
        if j == n {
            break;
        }

        let k = j + 1;
        if j >= 1 && k < n {
            let phase = ControllerPhase::for_interval(k);
            let started = Instant::now();
            let (current, next) = forward_estimate(&model, law, run.sensed[j - 1], seen, phase, &options.settings)
                .map_err(|e| e.at_step(k))?;
            if let Some(delay) = options.injected_delay {
                std::thread::sleep(delay);
            }
            run.cycle_times.push(started.elapsed().as_secs_f64());
            run.schedule[k].u = held_force_control(law, current, next, h);
            run.predictions.push(Prediction { k, phase, current, next });
        }

        plant.hold(run.schedule[j].u).map_err(|e| e.at_step(j))?;
    }
    Ok(())
}

fn interval_count(t_final: f64, h: f64) -> Result<usize> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(Error::InvalidArgument("final time must be positive".into()));
    }
    let n = (t_final / h).round();
    if (n * h - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::InvalidArgument(format!("T_f = {t_final} is not a multiple of h = {h}")));
    }
    if n < 5.0 {
        return Err(Error::InvalidArgument("T_f/h must be at least 5".into()));
    }
    Ok(n as usize)
}

/// Wall-time statistics of the two forward solves per cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleStats {
    pub cycles: usize,
    pub mean: f64,
    pub p99: f64,
    pub max: f64,
    /// Mean cycle time below the control interval.
    pub real_time: bool,
}

pub fn measure_cycle_time(run: &DigitalControllerRun) -> CycleStats {
    let mut times = run.cycle_times.clone();
    times.sort_by(f64::total_cmp);
    let cycles = times.len();
    let mean = if cycles == 0 { 0.0 } else { times.iter().sum::<f64>() / cycles as f64 };
    let p99 = if cycles == 0 {
        0.0
    } else {
        times[((cycles as f64 * 0.99).ceil() as usize).clamp(1, cycles) - 1]
    };
    CycleStats {
        cycles,
        mean,
        p99,
        max: times.last().copied().unwrap_or(0.0),
        real_time: mean < run.h,
    }
}

/// Runs the controller twice, the second time with every sample after
/// `cutoff` corrupted, and checks that the forces held on intervals
/// `k ≤ cutoff + 1` are bitwise identical.
///
/// The corrupted run may fail once it meets the bad samples; the forces it
/// fixed before failing are still compared.
pub fn causality_audit<P, F>(make_plant: F, law: &ContinuousLaw, t_final: f64, cutoff: usize, options: &ControllerOptions) -> Result<bool>
where
    P: Plant,
    F: Fn() -> P,
{
    let clean = run_digital_controller(&mut make_plant(), law, t_final, options)?;
    let corrupted_options = ControllerOptions {
        corrupt_after: Some(cutoff),
        ..options.clone()
    };
    let mut plant = make_plant();
    let mut corrupted = new_run(&plant, law, t_final, &corrupted_options)?;
    let _ = drive(&mut plant, law, &corrupted_options, &mut corrupted);

    let upto = (cutoff + 2).min(clean.schedule.len());
    let decided = |run: &DigitalControllerRun| run.predictions.iter().filter(|p| p.k < upto).count();
    Ok(decided(&corrupted) == decided(&clean) && clean.schedule[..upto] == corrupted.schedule[..upto])
}

/// Exponential decay rate of the oscillation envelope of `values`, fitted by
/// least squares to the logarithms of the local maxima of `|values|`.
///
/// Returns `None` with fewer than three peaks.
pub fn envelope_decay_rate(values: &[f64], h: f64) -> Option<f64> {
    let peaks: Vec<(f64, f64)> = values
        .windows(3)
        .enumerate()
        .filter(|(_, w)| w[1].abs() > w[0].abs() && w[1].abs() >= w[2].abs() && w[1] != 0.0)
        .map(|(i, w)| ((i + 1) as f64 * h, w[1].abs().ln()))
        .collect();
    if peaks.len() < 3 {
        return None;
    }
    let n = peaks.len() as f64;
    let (mt, my) = (peaks.iter().map(|p| p.0).sum::<f64>() / n, peaks.iter().map(|p| p.1).sum::<f64>() / n);
    let cov: f64 = peaks.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
    let var: f64 = peaks.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
    Some(-cov / var)
}
