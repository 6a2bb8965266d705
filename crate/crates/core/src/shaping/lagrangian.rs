use serde::{Deserialize, Serialize};

use super::{ControllerGains, QuadraticPotential, ShapedPotential};
use crate::cart_pendulum::CartPendulum;
use crate::error::Result;
use crate::variational::{
    ConfigurationPoint, ContinuousLagrangian, Covector, DiscreteLagrangian, MidpointLagrangian, Velocity,
};

/// Which potential the controlled Lagrangian carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PotentialTerm {
    /// The physical `V₁(φ) + V₂(s)`.
    Physical,
    /// `V₁(φ) + V_ε(y)`: the incline term cancels and `V_ε` breaks the symmetry.
    Shaped,
}

/// Continuous controlled Lagrangian with kinetic and potential shaping.
///
/// With `a = φ̇`, `b = ṡ`, `τ = κβ(φ)`:
///
/// ```text
/// L_c = ½αa² + βa(b+τa) + ½γ(b+τa)² + ½σγτ²a² + ½(ρ−1)γ(b − (σ−1)τa)² + λτa − V₁(φ) − V
/// ```
///
/// where `V` is `V₂(s)` or `V_ε(y)`. Kinetic shaping is `ρ = 1` with the
/// physical potential, and its alternative form adds `λ ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapedLagrangian {
    pub model: CartPendulum,
    pub kappa: f64,
    pub sigma: f64,
    pub rho: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub potential: PotentialTerm,
}

impl ShapedLagrangian {
    /// Velocity-shifted Lagrangian with the `½σγτ²φ̇²` correction.
    pub fn kinetic(model: CartPendulum, gains: &ControllerGains) -> Self {
        Self {
            model,
            kappa: gains.kappa,
            sigma: gains.sigma,
            rho: 1.0,
            lambda: 0.0,
            epsilon: 0.0,
            potential: PotentialTerm::Physical,
        }
    }

    /// Kinetic form plus the momentum-shift term `λτ(φ)φ̇`.
    pub fn alternative(model: CartPendulum, gains: &ControllerGains) -> Self {
        Self {
            lambda: gains.lambda,
            ..Self::kinetic(model, gains)
        }
    }

    /// Kinetic and potential shaping.
    pub fn potential(model: CartPendulum, gains: &ControllerGains) -> Result<Self> {
        gains.check_potential()?;
        Ok(Self {
            model,
            kappa: gains.kappa,
            sigma: gains.sigma,
            rho: gains.rho,
            lambda: 0.0,
            epsilon: gains.epsilon,
            potential: PotentialTerm::Shaped,
        })
    }

    pub fn discretize(self) -> MidpointLagrangian<Self> {
        let h = self.model.h();
        MidpointLagrangian::new(self, h)
    }

    pub fn tau(&self, phi: f64) -> f64 {
        self.kappa * self.model.beta(phi)
    }

    fn shaped(&self) -> QuadraticPotential {
        QuadraticPotential { epsilon: self.epsilon }
    }

    /// The shaped coordinate `y = s − c ∫₀^φ β`.
    pub fn y(&self, q: ConfigurationPoint) -> f64 {
        let c = (1.0 / self.sigma - (self.rho - 1.0) / self.rho) / self.model.gamma();
        q.s - c * self.model.beta_integral(q.phi)
    }

    fn y_phi_slope(&self, phi: f64) -> f64 {
        let c = (1.0 / self.sigma - (self.rho - 1.0) / self.rho) / self.model.gamma();
        -c * self.model.beta(phi)
    }

    fn kinetic_part(&self, q: ConfigurationPoint, v: Velocity) -> f64 {
        let (alpha, gamma) = (self.model.alpha(), self.model.gamma());
        let beta = self.model.beta(q.phi);
        let tau = self.kappa * beta;
        let (a, b) = (v.phi, v.s);
        let shifted = b + tau * a;
        let extra = b - (self.sigma - 1.0) * tau * a;
        0.5 * alpha * a * a
            + beta * a * shifted
            + 0.5 * gamma * shifted * shifted
            + 0.5 * self.sigma * gamma * tau * tau * a * a
            + 0.5 * (self.rho - 1.0) * gamma * extra * extra
            + self.lambda * tau * a
    }

    fn potential_part(&self, q: ConfigurationPoint) -> f64 {
        let v1 = self.model.shape_potential(q.phi);
        match self.potential {
            PotentialTerm::Physical => v1 + self.model.incline_potential(q.s),
            PotentialTerm::Shaped => v1 + self.shaped().value(self.y(q)),
        }
    }
}

impl ContinuousLagrangian for ShapedLagrangian {
    fn value(&self, q: ConfigurationPoint, v: Velocity) -> f64 {
        self.kinetic_part(q, v) - self.potential_part(q)
    }

    fn dq(&self, q: ConfigurationPoint, v: Velocity) -> Covector {
        let gamma = self.model.gamma();
        let beta = self.model.beta(q.phi);
        let tau = self.kappa * beta;
        let (a, b) = (v.phi, v.s);
        let shifted = b + tau * a;
        let extra = b - (self.sigma - 1.0) * tau * a;

        let d_beta = a * shifted;
        let d_tau = beta * a * a + gamma * a * shifted + self.sigma * gamma * tau * a * a
            - (self.rho - 1.0) * gamma * (self.sigma - 1.0) * a * extra
            + self.lambda * a;
        let kinetic_phi = self.model.beta_prime(q.phi) * (d_beta + self.kappa * d_tau);

        let v1p = self.model.shape_potential_prime(q.phi);
        match self.potential {
            PotentialTerm::Physical => Covector::new(kinetic_phi - v1p, -self.model.incline_slope()),
            PotentialTerm::Shaped => {
                let dv = self.shaped().derivative(self.y(q));
                Covector::new(kinetic_phi - v1p - dv * self.y_phi_slope(q.phi), -dv)
            }
        }
    }

    fn dv(&self, q: ConfigurationPoint, v: Velocity) -> Covector {
        let (alpha, gamma) = (self.model.alpha(), self.model.gamma());
        let beta = self.model.beta(q.phi);
        let tau = self.kappa * beta;
        let (a, b) = (v.phi, v.s);
        let shifted = b + tau * a;
        let extra = b - (self.sigma - 1.0) * tau * a;
        let d_rho = (self.rho - 1.0) * gamma * extra;
        Covector::new(
            alpha * a
                + beta * shifted
                + beta * tau * a
                + gamma * tau * shifted
                + self.sigma * gamma * tau * tau * a
                - d_rho * (self.sigma - 1.0) * tau
                + self.lambda * tau,
            beta * a + gamma * shifted + d_rho,
        )
    }
}

/// `τ(φ) = κβ(φ)`.
pub fn tau(model: &CartPendulum, kappa: f64, phi: f64) -> f64 {
    kappa * model.beta(phi)
}

/// Value of the discrete kinetic controlled Lagrangian.
pub fn kinetic_controlled_ld(
    model: &CartPendulum,
    gains: &ControllerGains,
    q0: ConfigurationPoint,
    q1: ConfigurationPoint,
) -> f64 {
    ShapedLagrangian::kinetic(*model, gains).discretize().value(q0, q1)
}

/// Value of the alternative discrete controlled Lagrangian.
pub fn alternative_controlled_ld(
    model: &CartPendulum,
    gains: &ControllerGains,
    q0: ConfigurationPoint,
    q1: ConfigurationPoint,
) -> f64 {
    ShapedLagrangian::alternative(*model, gains).discretize().value(q0, q1)
}

/// Value of the discrete potential-shaping controlled Lagrangian.
pub fn potential_controlled_ld(
    model: &CartPendulum,
    gains: &ControllerGains,
    q0: ConfigurationPoint,
    q1: ConfigurationPoint,
) -> Result<f64> {
    Ok(ShapedLagrangian::potential(*model, gains)?.discretize().value(q0, q1))
}

/// `[(1+γκ)β(φ_{k+½})Δφ + γΔs]/h`, the momentum of the kinetic controlled
/// Lagrangian and the quantity conserved by the kinetic closed loop.
pub fn controlled_momentum(
    model: &CartPendulum,
    kappa: f64,
    q0: ConfigurationPoint,
    q1: ConfigurationPoint,
) -> f64 {
    let gamma = model.gamma();
    let beta = model.beta(0.5 * (q0.phi + q1.phi));
    ((1.0 + gamma * kappa) * beta * (q1.phi - q0.phi) + gamma * (q1.s - q0.s)) / model.h()
}
