//! Continuous-time state feedback corresponding to the discrete shaping laws.
//!
//! The discrete `u_k` is an impulse over one step, so the force here is
//! `u_k / h` in the limit: the kinetic part is `−d(γτ(φ)φ̇)/dt`, the potential
//! part `V₂′(s) − V_ε′(y)/ρ`, and the damping terms become `(D/h)φ̇` and
//! `(D/h)ẏ`.

use serde::{Deserialize, Serialize};

use super::{y_of, ControllerGains, QuadraticPotential, ShapedPotential, ShapingMode};
use crate::cart_pendulum::CartPendulum;
use crate::error::{Error, Result};
use crate::variational::{ConfigurationPoint, Velocity};

/// `u(φ, s, φ̇, ṡ)` for one shaping mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousLaw {
    pub model: CartPendulum,
    pub gains: ControllerGains,
    pub mode: ShapingMode,
}

impl ContinuousLaw {
    pub fn new(model: CartPendulum, gains: ControllerGains, mode: ShapingMode) -> Result<Self> {
        if mode.is_potential() {
            gains.check_potential()?;
        }
        if !(gains.kappa.is_finite() && gains.dissipation.is_finite()) {
            return Err(Error::InvalidArgument("κ and D must be finite".into()));
        }
        Ok(Self { model, gains, mode })
    }

    /// Non-kinetic part of the force: potential shaping and damping.
    fn extra(&self, q: ConfigurationPoint, v: Velocity) -> f64 {
        let h = self.model.h();
        let d = self.gains.dissipation;
        let shaped = |q| {
            let y = y_of(&self.model, &self.gains, q).expect("gains checked at construction");
            self.model.incline_slope() - QuadraticPotential { epsilon: self.gains.epsilon }.derivative(y) / self.gains.rho
        };
        match self.mode {
            ShapingMode::Kinetic => 0.0,
            ShapingMode::KineticDissipative => d / h * v.phi,
            ShapingMode::Potential => shaped(q),
            ShapingMode::PotentialDissipative => {
                let y_rate = v.s - self.gains.shape_coefficient(self.model.gamma()) * self.model.beta(q.phi) * v.phi;
                shaped(q) + d / h * y_rate
            }
        }
    }

    /// Closed-loop force at state `(q, v)`.
    ///
    /// The kinetic part depends on `φ̈`, which is eliminated with the
    /// closed-loop equations of motion.
    pub fn force(&self, q: ConfigurationPoint, v: Velocity) -> f64 {
        let c = self.model.metric_coeffs(q.phi);
        let bp = self.model.beta_prime(q.phi);
        let gk = c.gamma * self.gains.kappa;
        let extra = self.extra(q, v);
        let denom = c.alpha * c.gamma - (1.0 + gk) * c.beta * c.beta;
        let phi_acc = (-c.gamma * self.model.shape_potential_prime(q.phi)
            - c.beta * (extra - self.model.incline_slope() - (1.0 + gk) * bp * v.phi * v.phi))
            / denom;
        -gk * (bp * v.phi * v.phi + c.beta * phi_acc) + extra
    }

    /// `−d(γτ(φ)φ̇)/dt` along a known motion with angle acceleration `phi_acc`.
    pub fn kinetic_force_along(&self, phi: f64, phi_rate: f64, phi_acc: f64) -> f64 {
        let gk = self.model.gamma() * self.gains.kappa;
        -gk * (self.model.beta_prime(phi) * phi_rate * phi_rate + self.model.beta(phi) * phi_acc)
    }
}
