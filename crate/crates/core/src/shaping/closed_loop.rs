use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{controlled_momentum, ControllerGains, QuadraticPotential, ShapedPotential};
use crate::cart_pendulum::CartPendulum;
use crate::error::{Error, Result};
use crate::variational::{ConfigurationPoint, Covector, DiscreteForce};

/// Closed-loop regimes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapingMode {
    Kinetic,
    KineticDissipative,
    Potential,
    PotentialDissipative,
}

impl ShapingMode {
    pub fn is_potential(self) -> bool {
        matches!(self, Self::Potential | Self::PotentialDissipative)
    }

    pub fn is_dissipative(self) -> bool {
        matches!(self, Self::KineticDissipative | Self::PotentialDissipative)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Kinetic => "kinetic",
            Self::KineticDissipative => "kinetic+diss",
            Self::Potential => "potential",
            Self::PotentialDissipative => "potential+diss",
        }
    }
}

impl fmt::Display for ShapingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ShapingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kinetic" => Ok(Self::Kinetic),
            "kinetic+diss" => Ok(Self::KineticDissipative),
            "potential" => Ok(Self::Potential),
            "potential+diss" => Ok(Self::PotentialDissipative),
            other => Err(Error::InvalidArgument(format!("unknown shaping mode `{other}`"))),
        }
    }
}

/// Where `V_ε′` is evaluated in the potential-shaping control.
///
/// Only [`VepsArgument::ShapeCoordinate`] reproduces the controlled-Lagrangian
/// dynamics; the cart-position variant exists for comparison.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum VepsArgument {
    /// `V_ε′(y_{k±½})`.
    #[default]
    ShapeCoordinate,
    /// `V_ε′(s_{k±½})`.
    CartPosition,
}

/// `(1/σ − (ρ−1)/ρ)/γ · ∫₀^φ β` subtracted from `s`.
pub fn y_of(model: &CartPendulum, gains: &ControllerGains, q: ConfigurationPoint) -> Result<f64> {
    gains.check_potential()?;
    Ok(y_unchecked(model, gains, q))
}

fn y_unchecked(model: &CartPendulum, gains: &ControllerGains, q: ConfigurationPoint) -> f64 {
    q.s - gains.shape_coefficient(model.gamma()) * model.beta_integral(q.phi)
}

/// Linearization of `y` at `φ = 0`: `s + ((ρ−1)/ρ − 1/σ)(β(0)/γ)φ`.
pub fn x_of(model: &CartPendulum, gains: &ControllerGains, q: ConfigurationPoint) -> Result<f64> {
    gains.check_potential()?;
    Ok(q.s + x_slope(model, gains) * q.phi)
}

/// `φ`-coefficient of `x`.
pub fn x_slope(model: &CartPendulum, gains: &ControllerGains) -> f64 {
    -gains.shape_coefficient(model.gamma()) * model.beta(0.0)
}

/// `γτ(φ_{k+½})Δφ/h`; its differences form the kinetic control.
fn shift_impulse(model: &CartPendulum, kappa: f64, q0: ConfigurationPoint, q1: ConfigurationPoint) -> f64 {
    let mid = 0.5 * (q0.phi + q1.phi);
    model.gamma() * kappa * model.beta(mid) * (q1.phi - q0.phi) / model.h()
}

/// `−[γΔφ_k τ(φ_{k+½}) − γΔφ_{k−1} τ(φ_{k−½})]/h`.
pub fn kinetic_control_input(
    model: &CartPendulum,
    kappa: f64,
    q_prev: ConfigurationPoint,
    q_curr: ConfigurationPoint,
    q_next: ConfigurationPoint,
) -> f64 {
    -(shift_impulse(model, kappa, q_curr, q_next) - shift_impulse(model, kappa, q_prev, q_curr))
}

/// `D(Δφ_{k−1} + Δφ_k)/(2h)`.
pub fn kinetic_dissipation_term(
    q_prev: ConfigurationPoint,
    _q_curr: ConfigurationPoint,
    q_next: ConfigurationPoint,
    d: f64,
    h: f64,
) -> f64 {
    d * (q_next.phi - q_prev.phi) / (2.0 * h)
}

/// `D(Δy_{k−1} + Δy_k)/(2h)`.
pub fn potential_dissipation_term(
    model: &CartPendulum,
    gains: &ControllerGains,
    q_prev: ConfigurationPoint,
    _q_curr: ConfigurationPoint,
    q_next: ConfigurationPoint,
) -> Result<f64> {
    let dy = y_of(model, gains, q_next)? - y_of(model, gains, q_prev)?;
    Ok(gains.dissipation * dy / (2.0 * model.h()))
}

/// The non-kinetic half-step impulse `(h/2)V₂′ − (h/2ρ)V_ε′(arg(q_{k+½}))`.
fn potential_half_impulse(
    model: &CartPendulum,
    gains: &ControllerGains,
    arg: VepsArgument,
    q0: ConfigurationPoint,
    q1: ConfigurationPoint,
) -> f64 {
    let h = model.h();
    let mid = q0.midpoint(q1);
    let at = match arg {
        VepsArgument::ShapeCoordinate => y_unchecked(model, gains, mid),
        VepsArgument::CartPosition => mid.s,
    };
    let shaped = QuadraticPotential { epsilon: gains.epsilon };
    0.5 * h * model.incline_slope() - 0.5 * h / gains.rho * shaped.derivative(at)
}

/// Potential-shaping control at node `k`, without dissipation.
pub fn potential_control_input(
    model: &CartPendulum,
    gains: &ControllerGains,
    q_prev: ConfigurationPoint,
    q_curr: ConfigurationPoint,
    q_next: ConfigurationPoint,
    arg: VepsArgument,
) -> Result<f64> {
    gains.check_potential()?;
    Ok(potential_half_impulse(model, gains, arg, q_curr, q_next)
        + potential_half_impulse(model, gains, arg, q_prev, q_curr)
        + kinetic_control_input(model, gains.kappa, q_prev, q_curr, q_next))
}

/// `J_k = ργ(Δs_k/h − (σ−1)τ(φ_{k+½})Δφ_k/h)`.
pub fn auxiliary_momentum(
    model: &CartPendulum,
    gains: &ControllerGains,
    q0: ConfigurationPoint,
    q1: ConfigurationPoint,
) -> f64 {
    let h = model.h();
    let tau = gains.kappa * model.beta(0.5 * (q0.phi + q1.phi));
    gains.rho * model.gamma() * ((q1.s - q0.s) / h - (gains.sigma - 1.0) * tau * (q1.phi - q0.phi) / h)
}

/// Slot contributions of the shape-equation forcing for the pair `(q0, q1)`.
///
/// Returns `(first, second)` with
/// `first  = K[ τJ + (h/2)τV_ε′(y) − ½τ′JΔφ]`,
/// `second = K[−τJ + (h/2)τV_ε′(y) − ½τ′JΔφ]`,
/// everything at the midpoint and `K = 1 − σ + σ/ρ`.
fn forcing_slots(
    model: &CartPendulum,
    gains: &ControllerGains,
    q0: ConfigurationPoint,
    q1: ConfigurationPoint,
) -> (f64, f64) {
    let h = model.h();
    let mid = q0.midpoint(q1);
    let tau = gains.kappa * model.beta(mid.phi);
    let tau_prime = gains.kappa * model.beta_prime(mid.phi);
    let j = auxiliary_momentum(model, gains, q0, q1);
    let vp = QuadraticPotential { epsilon: gains.epsilon }.derivative(y_unchecked(model, gains, mid));
    let k = gains.forcing_prefactor();
    let common = 0.5 * h * tau * vp - 0.5 * tau_prime * j * (q1.phi - q0.phi);
    (k * (tau * j + common), k * (-tau * j + common))
}

/// The forcing `w_k` of the controlled shape equation.
pub fn w_term(
    model: &CartPendulum,
    gains: &ControllerGains,
    q_prev: ConfigurationPoint,
    q_curr: ConfigurationPoint,
    q_next: ConfigurationPoint,
) -> Result<f64> {
    gains.check_potential()?;
    Ok(forcing_slots(model, gains, q_curr, q_next).0 + forcing_slots(model, gains, q_prev, q_curr).1)
}

/// Shape-equation forcing on the controlled-Lagrangian side.
#[derive(Clone, Copy, Debug)]
pub struct ShapeForcing {
    model: CartPendulum,
    gains: ControllerGains,
}

impl ShapeForcing {
    pub fn new(model: CartPendulum, gains: ControllerGains) -> Result<Self> {
        gains.check_potential()?;
        Ok(Self { model, gains })
    }
}

impl DiscreteForce for ShapeForcing {
    fn f1(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector {
        Covector::new(forcing_slots(&self.model, &self.gains, q0, q1).0, 0.0)
    }
    fn f2(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector {
        Covector::new(forcing_slots(&self.model, &self.gains, q0, q1).1, 0.0)
    }
}

/// The control `u_k` applied to the physical discrete dynamics, as a discrete
/// force `(0, u)`.
///
/// Every term of `u_k` is a sum of a contribution from the step
/// `(q_{k−1}, q_k)` and one from `(q_k, q_{k+1})`, so each lands in the slot
/// that owns its step. This keeps the update implicit in `q_{k+1}` only
/// through `F^d_1`, and makes `−(D1 L^d + F^d_1)` the closed-loop momentum.
#[derive(Clone, Copy, Debug)]
pub struct ClosedLoopForce {
    model: CartPendulum,
    gains: ControllerGains,
    mode: ShapingMode,
    veps_argument: VepsArgument,
}

impl ClosedLoopForce {
    pub fn new(model: CartPendulum, gains: ControllerGains, mode: ShapingMode) -> Result<Self> {
        if !gains.kappa.is_finite() || !gains.dissipation.is_finite() {
            return Err(Error::InvalidArgument("κ and D must be finite".into()));
        }
        if mode.is_potential() {
            gains.check_potential()?;
        }
        Ok(Self {
            model,
            gains,
            mode,
            veps_argument: VepsArgument::ShapeCoordinate,
        })
    }

    pub fn with_veps_argument(mut self, arg: VepsArgument) -> Self {
        self.veps_argument = arg;
        self
    }

    pub fn gains(&self) -> &ControllerGains {
        &self.gains
    }

    pub fn mode(&self) -> ShapingMode {
        self.mode
    }

    pub fn model(&self) -> &CartPendulum {
        &self.model
    }

    /// Common part of both slots for the step `(q0, q1)`.
    fn shared(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> f64 {
        let h = self.model.h();
        let d = self.gains.dissipation;
        match self.mode {
            ShapingMode::Kinetic => 0.0,
            ShapingMode::KineticDissipative => d * (q1.phi - q0.phi) / (2.0 * h),
            ShapingMode::Potential => potential_half_impulse(&self.model, &self.gains, self.veps_argument, q0, q1),
            ShapingMode::PotentialDissipative => {
                let dy = y_unchecked(&self.model, &self.gains, q1) - y_unchecked(&self.model, &self.gains, q0);
                potential_half_impulse(&self.model, &self.gains, self.veps_argument, q0, q1) + d * dy / (2.0 * h)
            }
        }
    }
}

impl DiscreteForce for ClosedLoopForce {
    fn f1(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector {
        Covector::new(0.0, self.shared(q0, q1) - shift_impulse(&self.model, self.gains.kappa, q0, q1))
    }

    fn f2(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector {
        Covector::new(0.0, self.shared(q0, q1) + shift_impulse(&self.model, self.gains.kappa, q0, q1))
    }

    fn control_input(
        &self,
        q_prev: ConfigurationPoint,
        q_curr: ConfigurationPoint,
        q_next: ConfigurationPoint,
    ) -> Option<f64> {
        Some(self.f1(q_curr, q_next).s + self.f2(q_prev, q_curr).s)
    }

    fn momentum(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Option<f64> {
        Some(controlled_momentum(&self.model, self.gains.kappa, q0, q1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cart_pendulum::ModelParameters;
    use crate::variational::{forced_del_residual, DiscreteLagrangian};
    use approx::assert_relative_eq;

    fn triple() -> [ConfigurationPoint; 3] {
        [
            ConfigurationPoint::new(0.1, 0.02),
            ConfigurationPoint::new(0.103, 0.025),
            ConfigurationPoint::new(0.104, 0.031),
        ]
    }

    #[test]
    fn kinetic_input_matches_closed_form() {
        let params = ModelParameters::default();
        let model = CartPendulum::new(params);
        let [a, b, c] = triple();
        let (h, gamma, kappa) = (params.time_step, params.gamma(), 20.0);
        let t = |p: f64| kappa * model.beta(p);
        let expected =
            -(gamma * (c.phi - b.phi) * t(0.5 * (b.phi + c.phi)) - gamma * (b.phi - a.phi) * t(0.5 * (a.phi + b.phi))) / h;
        assert_relative_eq!(kinetic_control_input(&model, kappa, a, b, c), expected, max_relative = 1e-13);
        assert_eq!(kinetic_control_input(&model, 0.0, a, b, c), 0.0);
        let still = ConfigurationPoint::new(0.2, 0.0);
        assert_eq!(kinetic_control_input(&model, kappa, still, still, still), 0.0);
    }

    #[test]
    fn residual_s_component_carries_control() {
        // D1_s + D2_s + u = residual_s, with u the closed-loop control.
        let params = ModelParameters::default().with_incline(0.35);
        let model = CartPendulum::new(params);
        let gains = ControllerGains::potential(&params, 20.0, -0.02, 1e-5).unwrap().with_dissipation(-0.01);
        let force = ClosedLoopForce::new(model, gains, ShapingMode::PotentialDissipative).unwrap();
        let ld = model.discrete_lagrangian();
        let [a, b, c] = triple();
        let r = forced_del_residual(&ld, &force, a, b, c).unwrap();
        let u = potential_control_input(&model, &gains, a, b, c, VepsArgument::ShapeCoordinate).unwrap()
            + potential_dissipation_term(&model, &gains, a, b, c).unwrap();
        let plain = ld.d1(b, c) + ld.d2(a, b);
        assert_relative_eq!(r.s, plain.s + u, max_relative = 1e-12);
        assert_eq!(r.phi, plain.phi);
        assert_relative_eq!(force.control_input(a, b, c).unwrap(), u, max_relative = 1e-12);
    }

    #[test]
    fn equilibrium_input_balances_incline() {
        let params = ModelParameters::default().with_incline(std::f64::consts::PI / 9.0);
        let model = CartPendulum::new(params);
        let gains = ControllerGains::potential(&params, 20.0, -0.02, 1e-5).unwrap();
        let z = ConfigurationPoint::ZERO;
        let u = potential_control_input(&model, &gains, z, z, z, VepsArgument::ShapeCoordinate).unwrap();
        let expected = -params.time_step * params.gamma() * params.gravity * params.incline.sin();
        assert_relative_eq!(u, expected, max_relative = 1e-13);
    }

    #[test]
    fn potential_reduces_to_kinetic_without_potentials() {
        let params = ModelParameters::default();
        let model = CartPendulum::new(params);
        let gains = ControllerGains::potential(&params, 20.0, -0.02, 0.0).unwrap();
        let [a, b, c] = triple();
        assert_relative_eq!(
            potential_control_input(&model, &gains, a, b, c, VepsArgument::ShapeCoordinate).unwrap(),
            kinetic_control_input(&model, 20.0, a, b, c),
            max_relative = 1e-13
        );
    }

    #[test]
    fn y_and_x_at_equilibrium_and_slope() {
        let params = ModelParameters::default().with_incline(0.3);
        let model = CartPendulum::new(params);
        let gains = ControllerGains::potential(&params, 20.0, -0.02, 1e-5).unwrap();
        assert!(y_of(&model, &gains, ConfigurationPoint::ZERO).unwrap().abs() < 1e-15);
        assert_eq!(x_of(&model, &gains, ConfigurationPoint::ZERO).unwrap(), 0.0);
        let d = 1e-6;
        let slope = (y_of(&model, &gains, ConfigurationPoint::new(d, 0.0)).unwrap()
            - y_of(&model, &gains, ConfigurationPoint::new(-d, 0.0)).unwrap())
            / (2.0 * d);
        assert_relative_eq!(slope, x_slope(&model, &gains), max_relative = 1e-8);
        let frozen = CartPendulum::with_frozen_coupling(params);
        let q = ConfigurationPoint::new(0.4, -0.3);
        assert_relative_eq!(
            y_of(&frozen, &gains, q).unwrap(),
            x_of(&frozen, &gains, q).unwrap(),
            max_relative = 1e-13
        );
        let bad = ControllerGains { rho: 0.0, ..gains };
        assert!(y_of(&model, &bad, q).is_err());
    }

    #[test]
    fn dissipation_terms() {
        let h = 0.05;
        let c = 0.3;
        let q = |k: f64| ConfigurationPoint::new(c * h * k, 0.0);
        assert_relative_eq!(kinetic_dissipation_term(q(0.0), q(1.0), q(2.0), 0.7, h), 0.7 * c, max_relative = 1e-13);
        assert_eq!(kinetic_dissipation_term(q(1.0), q(1.0), q(1.0), 0.7, h), 0.0);
        assert_eq!(kinetic_dissipation_term(q(0.0), q(1.0), q(2.0), 0.0, h), 0.0);
    }

    #[test]
    fn w_vanishes_at_equilibrium_and_zero_prefactor() {
        let params = ModelParameters::default().with_incline(0.3);
        let model = CartPendulum::new(params);
        let gains = ControllerGains::potential(&params, 20.0, -0.02, 1e-5).unwrap();
        let z = ConfigurationPoint::ZERO;
        assert_eq!(w_term(&model, &gains, z, z, z).unwrap(), 0.0);
        let zero_k = ControllerGains {
            sigma: -1.0,
            rho: 0.5,
            ..gains
        };
        let [a, b, c] = triple();
        assert_eq!(w_term(&model, &zero_k, a, b, c).unwrap(), 0.0);
    }

    #[test]
    fn mode_round_trip() {
        for m in [
            ShapingMode::Kinetic,
            ShapingMode::KineticDissipative,
            ShapingMode::Potential,
            ShapingMode::PotentialDissipative,
        ] {
            assert_eq!(m.as_str().parse::<ShapingMode>().unwrap(), m);
        }
        assert!("mpc".parse::<ShapingMode>().is_err());
    }

    #[test]
    fn zero_gain_kinetic_force_vanishes() {
        let model = CartPendulum::new(ModelParameters::default());
        let force = ClosedLoopForce::new(model, ControllerGains::default(), ShapingMode::Kinetic).unwrap();
        let [a, b, _] = triple();
        assert_eq!(force.f1(a, b), Covector::ZERO);
        assert_eq!(force.f2(a, b), Covector::ZERO);
    }
}
