//! The cart-pendulum on an inclined plane.
//!
//! `φ` is the pendulum angle measured from the upright position and `s` the
//! cart position along the incline, which makes angle `ψ` with the horizontal.
//! The kinetic energy is `½[αφ̇² + 2β(φ)φ̇ṡ + γṡ²]` with
//! `α = ml²`, `β(φ) = ml cos(φ − ψ)`, `γ = M + m`.
//!
//! The pendulum potential is `V₁(φ) = mgl cos φ`, maximal at the upright
//! equilibrium, and the incline contributes `V₂(s) = −γ g s sin ψ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variational::{ConfigurationPoint, ContinuousLagrangian, Covector, MidpointLagrangian, Velocity};

/// Physical constants and the time step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    /// Pendulum bob mass `m` (kg).
    pub pendulum_mass: f64,
    /// Cart mass `M` (kg).
    pub cart_mass: f64,
    /// Pendulum length `l` (m).
    pub length: f64,
    /// Incline angle `ψ` (rad).
    pub incline: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
    /// Time step `h` (s).
    pub time_step: f64,
}

impl Default for ModelParameters {
    fn default() -> Self {
        Self {
            pendulum_mass: 0.14,
            cart_mass: 0.44,
            length: 0.215,
            incline: 0.0,
            gravity: 9.81,
            time_step: 0.05,
        }
    }
}

impl ModelParameters {
    pub fn new(m: f64, cart_mass: f64, l: f64, psi: f64, g: f64, h: f64) -> Result<Self> {
        let p = Self {
            pendulum_mass: m,
            cart_mass,
            length: l,
            incline: psi,
            gravity: g,
            time_step: h,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_incline(mut self, psi: f64) -> Self {
        self.incline = psi;
        self
    }

    pub fn with_time_step(mut self, h: f64) -> Self {
        self.time_step = h;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("m", self.pendulum_mass),
            ("M", self.cart_mass),
            ("l", self.length),
            ("g", self.gravity),
            ("h", self.time_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.incline.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!(
                "psi must satisfy |psi| < pi/2, got {}",
                self.incline
            )));
        }
        Ok(())
    }

    /// `α = ml²`.
    pub fn alpha(&self) -> f64 {
        self.pendulum_mass * self.length * self.length
    }

    /// `γ = M + m`.
    pub fn gamma(&self) -> f64 {
        self.cart_mass + self.pendulum_mass
    }

    /// `ml`, the amplitude of `β`.
    pub fn coupling_amplitude(&self) -> f64 {
        self.pendulum_mass * self.length
    }

    /// `mgl = −V₁″(0)`.
    pub fn pendulum_stiffness(&self) -> f64 {
        self.pendulum_mass * self.gravity * self.length
    }

    /// `α, β(φ), γ`.
    pub fn metric_coeffs(&self, phi: f64) -> KineticCoefficients {
        KineticCoefficients {
            alpha: self.alpha(),
            beta: self.coupling_amplitude() * (phi - self.incline).cos(),
            gamma: self.gamma(),
        }
    }

    /// `V₁(φ) + V₂(s)`.
    pub fn potential(&self, q: ConfigurationPoint) -> f64 {
        CartPendulum::new(*self).potential(q)
    }
}

/// Coefficients of the kinetic-energy quadratic form at one angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl KineticCoefficients {
    /// `αγ − β²`, positive for a nondegenerate metric.
    pub fn determinant(&self) -> f64 {
        self.alpha * self.gamma - self.beta * self.beta
    }
}

/// How the coupling `β` depends on the angle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coupling {
    /// `β(φ) = ml cos(φ − ψ)`, the physical model.
    #[default]
    Cosine,
    /// `β ≡ ml cos ψ`, its value at the equilibrium. Used to isolate terms
    /// that only arise from the angle dependence of `β`.
    Frozen,
}

/// The cart-pendulum Lagrangian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartPendulum {
    pub params: ModelParameters,
    pub coupling: Coupling,
}

impl CartPendulum {
    pub fn new(params: ModelParameters) -> Self {
        Self {
            params,
            coupling: Coupling::Cosine,
        }
    }

    pub fn with_frozen_coupling(params: ModelParameters) -> Self {
        Self {
            params,
            coupling: Coupling::Frozen,
        }
    }

    pub fn h(&self) -> f64 {
        self.params.time_step
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha()
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma()
    }

    pub fn beta(&self, phi: f64) -> f64 {
        let ml = self.params.coupling_amplitude();
        match self.coupling {
            Coupling::Cosine => ml * (phi - self.params.incline).cos(),
            Coupling::Frozen => ml * self.params.incline.cos(),
        }
    }

    pub fn beta_prime(&self, phi: f64) -> f64 {
        match self.coupling {
            Coupling::Cosine => -self.params.coupling_amplitude() * (phi - self.params.incline).sin(),
            Coupling::Frozen => 0.0,
        }
    }

    /// `∫₀^φ β(z) dz`.
    pub fn beta_integral(&self, phi: f64) -> f64 {
        let (ml, psi) = (self.params.coupling_amplitude(), self.params.incline);
        match self.coupling {
            Coupling::Cosine => ml * ((phi - psi).sin() + psi.sin()),
            Coupling::Frozen => ml * psi.cos() * phi,
        }
    }

    pub fn metric_coeffs(&self, phi: f64) -> KineticCoefficients {
        KineticCoefficients {
            alpha: self.alpha(),
            beta: self.beta(phi),
            gamma: self.gamma(),
        }
    }

    /// `V₁(φ) = mgl cos φ`.
    pub fn shape_potential(&self, phi: f64) -> f64 {
        self.params.pendulum_stiffness() * phi.cos()
    }

    pub fn shape_potential_prime(&self, phi: f64) -> f64 {
        -self.params.pendulum_stiffness() * phi.sin()
    }

    /// `V₂(s) = −γ g s sin ψ`.
    pub fn incline_potential(&self, s: f64) -> f64 {
        -self.gamma() * self.params.gravity * s * self.params.incline.sin()
    }

    /// `V₂′`, a constant.
    pub fn incline_slope(&self) -> f64 {
        -self.gamma() * self.params.gravity * self.params.incline.sin()
    }

    pub fn potential(&self, q: ConfigurationPoint) -> f64 {
        self.shape_potential(q.phi) + self.incline_potential(q.s)
    }

    pub fn kinetic_energy(&self, q: ConfigurationPoint, v: Velocity) -> f64 {
        let c = self.metric_coeffs(q.phi);
        0.5 * (c.alpha * v.phi * v.phi + 2.0 * c.beta * v.phi * v.s + c.gamma * v.s * v.s)
    }

    /// `L^d(q0, q1) = h L(q_{k+½}, Δq/h)`.
    pub fn discrete_lagrangian(self) -> MidpointLagrangian<Self> {
        let h = self.h();
        MidpointLagrangian::new(self, h)
    }

    /// Equations of motion under a cart force `u`: returns `(φ̈, s̈)`.
    pub fn acceleration(&self, q: ConfigurationPoint, v: Velocity, u: f64) -> Velocity {
        let c = self.metric_coeffs(q.phi);
        let bp = self.beta_prime(q.phi);
        // d/dt ∂L/∂q̇ − ∂L/∂q = (0, u)
        let rhs_phi = -self.shape_potential_prime(q.phi);
        let rhs_s = u - bp * v.phi * v.phi - self.incline_slope();
        let det = c.determinant();
        Velocity::new(
            (c.gamma * rhs_phi - c.beta * rhs_s) / det,
            (c.alpha * rhs_s - c.beta * rhs_phi) / det,
        )
    }
}

impl ContinuousLagrangian for CartPendulum {
    fn value(&self, q: ConfigurationPoint, v: Velocity) -> f64 {
        self.kinetic_energy(q, v) - self.potential(q)
    }

    fn dq(&self, q: ConfigurationPoint, v: Velocity) -> Covector {
        Covector::new(
            self.beta_prime(q.phi) * v.phi * v.s - self.shape_potential_prime(q.phi),
            -self.incline_slope(),
        )
    }

    fn dv(&self, q: ConfigurationPoint, v: Velocity) -> Covector {
        let c = self.metric_coeffs(q.phi);
        Covector::new(c.alpha * v.phi + c.beta * v.s, c.beta * v.phi + c.gamma * v.s)
    }

    fn energy(&self, q: ConfigurationPoint, v: Velocity) -> f64 {
        self.kinetic_energy(q, v) + self.potential(q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_coefficients() {
        let c = ModelParameters::default().metric_coeffs(0.0);
        assert_relative_eq!(c.alpha, 0.0064715, max_relative = 1e-12);
        assert_relative_eq!(c.beta, 0.0301, max_relative = 1e-12);
        assert_relative_eq!(c.gamma, 0.58, max_relative = 1e-12);
    }

    #[test]
    fn coupling_vanishes_at_right_angle() {
        let p = ModelParameters::default().with_incline(0.3);
        assert!(p.metric_coeffs(0.3 + std::f64::consts::FRAC_PI_2).beta.abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ModelParameters::new(0.0, 0.44, 0.215, 0.0, 9.81, 0.05).is_err());
        assert!(ModelParameters::new(0.14, 0.44, 0.215, 1.6, 9.81, 0.05).is_err());
        assert!(ModelParameters::new(0.14, 0.44, 0.215, 0.0, 9.81, -0.05).is_err());
        assert!(ModelParameters::new(0.14, 0.44, 0.215, 0.2, 9.81, 0.05).is_ok());
    }

    #[test]
    fn upright_potential_is_a_maximum() {
        let cp = CartPendulum::new(ModelParameters::default());
        let v0 = cp.potential(ConfigurationPoint::ZERO);
        assert_relative_eq!(v0, 0.14 * 9.81 * 0.215, max_relative = 1e-14);
        assert!(cp.potential(ConfigurationPoint::new(0.1, 0.0)) < v0);
        assert!(cp.potential(ConfigurationPoint::new(-0.1, 0.0)) < v0);
    }

    #[test]
    fn incline_potential_value() {
        let psi = std::f64::consts::PI / 9.0;
        let cp = CartPendulum::new(ModelParameters::default().with_incline(psi));
        let expected = 0.14 * 9.81 * 0.215 - 0.58 * 9.81 * psi.sin();
        assert_relative_eq!(cp.potential(ConfigurationPoint::new(0.0, 1.0)), expected, max_relative = 1e-14);
    }

    #[test]
    fn frozen_coupling_is_constant() {
        let p = ModelParameters::default().with_incline(0.2);
        let cp = CartPendulum::with_frozen_coupling(p);
        assert_eq!(cp.beta(0.7), cp.beta(-0.3));
        assert_eq!(cp.beta_prime(0.7), 0.0);
        assert_relative_eq!(cp.beta_integral(0.5), 0.5 * cp.beta(0.0), max_relative = 1e-14);
    }

    #[test]
    fn acceleration_agrees_with_momentum_rate() {
        // d/dt ∂L/∂q̇ along (q, v, a) must equal ∂L/∂q + (0, u).
        let cp = CartPendulum::new(ModelParameters::default().with_incline(0.3));
        let (q, v, u) = (ConfigurationPoint::new(0.2, -0.1), Velocity::new(0.4, -0.3), 0.7);
        let a = cp.acceleration(q, v, u);
        let dt = 1e-6;
        let fwd = cp.dv(q.displaced(v, dt), Velocity::new(v.phi + dt * a.phi, v.s + dt * a.s));
        let bwd = cp.dv(q.displaced(v, -dt), Velocity::new(v.phi - dt * a.phi, v.s - dt * a.s));
        let rate = (fwd - bwd) * (0.5 / dt);
        let rhs = cp.dq(q, v) + Covector::new(0.0, u);
        assert_relative_eq!(rate.phi, rhs.phi, max_relative = 1e-6, epsilon = 1e-9);
        assert_relative_eq!(rate.s, rhs.s, max_relative = 1e-6, epsilon = 1e-9);
    }
}
