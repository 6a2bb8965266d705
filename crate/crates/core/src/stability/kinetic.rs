use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linear::{recurrence_map, LinearUpdateMap};
use crate::cart_pendulum::ModelParameters;
use crate::error::{Error, Result};
use crate::shaping::ControllerGains;

/// `(αγ − β(0)² − β(0)²γκ)/γ`, the effective inertia of the reduced shape
/// dynamics. Stability of the kinetic closed loop requires it to be negative.
pub fn reduced_inertia(params: &ModelParameters, kappa: f64) -> f64 {
    let c = params.metric_coeffs(0.0);
    (c.alpha * c.gamma - c.beta * c.beta - c.beta * c.beta * c.gamma * kappa) / c.gamma
}

/// Map of `A(2φ_k − φ_{k−1} − φ_{k+1}) + (C/4)(φ_{k−1} + 2φ_k + φ_{k+1}) − b(φ_{k+1} − φ_{k−1}) = 0`
/// with `A = inertia/h²`.
///
/// `damping` is `b`; zero gives the conservative map.
pub fn kinetic_recurrence(inertia: f64, stiffness: f64, damping: f64, h: f64) -> Result<LinearUpdateMap> {
    let a = inertia / (h * h);
    let c4 = 0.25 * stiffness;
    let next = c4 - a - damping;
    if next.abs() <= 1e-14 * (c4.abs() + a.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateLinearization(
            "leading coefficient of the reduced shape recurrence vanishes".into(),
        ));
    }
    let m = |v: f64| DMatrix::from_element(1, 1, v);
    recurrence_map(&m(next), &m(2.0 * a + 2.0 * c4), &m(c4 - a + damping), h)
}

/// Conservative linearization of the kinetic closed loop in `(φ_{k−1}, φ_k)`.
///
/// Independent of the momentum level.
pub fn linearized_kinetic_map(params: &ModelParameters, gains: &ControllerGains) -> Result<LinearUpdateMap> {
    kinetic_recurrence(
        reduced_inertia(params, gains.kappa),
        params.pendulum_stiffness(),
        0.0,
        params.time_step,
    )
}

/// Linearization with the damping term `D(Δφ_{k−1} + Δφ_k)/(2h)` added to `u_k`,
/// `D = gains.dissipation`.
///
/// The term enters the reduced recurrence as `−(β(0)D/(2h²γ))(φ_{k+1} − φ_{k−1})`,
/// so it damps when `β(0)D < 0`.
pub fn kinetic_damped_map(params: &ModelParameters, gains: &ControllerGains) -> Result<LinearUpdateMap> {
    let c = params.metric_coeffs(0.0);
    let h = params.time_step;
    let b = c.beta * gains.dissipation / (2.0 * h * h * c.gamma);
    kinetic_recurrence(reduced_inertia(params, gains.kappa), params.pendulum_stiffness(), b, h)
}

/// Threshold gain for spectral stability of the kinetic closed loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticSpectralCondition {
    /// `(αγ − β(0)²)/(β(0)²γ)`.
    pub kappa_crit: f64,
    /// `−β(0)²/(αγ − β(0)²)`, lower end of the equivalent window for `σ`.
    pub sigma_lower: f64,
}

impl KineticSpectralCondition {
    pub fn holds(&self, kappa: f64) -> bool {
        kappa > self.kappa_crit
    }

    pub fn sigma_in_window(&self, sigma: f64) -> bool {
        self.sigma_lower < sigma && sigma < 0.0
    }
}

pub fn kinetic_spectral_condition(params: &ModelParameters) -> Result<KineticSpectralCondition> {
    let c = params.metric_coeffs(0.0);
    let b2 = c.beta * c.beta;
    if b2 == 0.0 {
        return Err(Error::DegenerateLinearization(
            "β(0) = 0: the shape is uncontrollable at the equilibrium".into(),
        ));
    }
    let det = c.alpha * c.gamma - b2;
    Ok(KineticSpectralCondition {
        kappa_crit: det / (b2 * c.gamma),
        sigma_lower: -b2 / det,
    })
}

/// Quadratic energy `(inertia/2)(Δφ/h)² − (C/2)φ_{k+½}²` of the reduced linear
/// dynamics, conserved by [`linearized_kinetic_map`].
pub fn quadratic_energy_kinetic(params: &ModelParameters, gains: &ControllerGains, phi_k: f64, phi_next: f64) -> f64 {
    let h = params.time_step;
    let rate = (phi_next - phi_k) / h;
    let mid = 0.5 * (phi_k + phi_next);
    0.5 * reduced_inertia(params, gains.kappa) * rate * rate - 0.5 * params.pendulum_stiffness() * mid * mid
}
