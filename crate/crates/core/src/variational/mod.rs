//! Discrete mechanics on the configuration space `Q = S × G ≅ ℝ²`.
//!
//! A discrete Lagrangian `L^d(q_k, q_{k+1})` approximates the action over one
//! time step. Stationarity of the action sum, together with the discrete
//! Lagrange–d'Alembert forces `F^d_1`, `F^d_2`, gives the forced discrete
//! Euler–Lagrange (DEL) equations
//!
//! ```text
//! D1 L^d(q_k, q_{k+1}) + D2 L^d(q_{k-1}, q_k) + F^d_1(q_k, q_{k+1}) + F^d_2(q_{k-1}, q_k) = 0
//! ```
//!
//! which implicitly define the update `(q_{k-1}, q_k) ↦ (q_k, q_{k+1})`.

mod integrator;
mod newton;
mod trajectory;

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

pub use integrator::{
    del_residual, discrete_action, forced_del_residual, initialize_from_state, replay_residual, simulate,
    simulate_from_state, step,
};
pub use newton::{newton_solve, NewtonOutcome};
pub use trajectory::Trajectory;

use crate::error::{Error, Result};

macro_rules! pair_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            pub phi: f64,
            pub s: f64,
        }

        impl $name {
            pub const ZERO: Self = Self { phi: 0.0, s: 0.0 };

            pub const fn new(phi: f64, s: f64) -> Self {
                Self { phi, s }
            }

            pub fn is_finite(&self) -> bool {
                self.phi.is_finite() && self.s.is_finite()
            }

            pub fn norm_inf(&self) -> f64 {
                self.phi.abs().max(self.s.abs())
            }

            pub fn to_array(self) -> [f64; 2] {
                [self.phi, self.s]
            }

            pub fn from_slice(x: &[f64]) -> Self {
                Self { phi: x[0], s: x[1] }
            }
        }

        impl Add for $name {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                Self::new(self.phi + rhs.phi, self.s + rhs.s)
            }
        }

        impl AddAssign for $name {
            fn add_assign(&mut self, rhs: Self) {
                self.phi += rhs.phi;
                self.s += rhs.s;
            }
        }

        impl Sub for $name {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                Self::new(self.phi - rhs.phi, self.s - rhs.s)
            }
        }

        impl Neg for $name {
            type Output = Self;
            fn neg(self) -> Self {
                Self::new(-self.phi, -self.s)
            }
        }

        impl Mul<f64> for $name {
            type Output = Self;
            fn mul(self, rhs: f64) -> Self {
                Self::new(self.phi * rhs, self.s * rhs)
            }
        }

        impl Mul<$name> for f64 {
            type Output = $name;
            fn mul(self, rhs: $name) -> $name {
                rhs * self
            }
        }
    };
}

pair_type!(
    /// A configuration `q = (φ, s)`: pendulum angle (rad, unwrapped) and cart
    /// position (m).
    ConfigurationPoint
);
pair_type!(
    /// A velocity `(φ̇, ṡ)`.
    Velocity
);
pair_type!(
    /// A covector on `Q`: momenta, forces, impulses and DEL residuals.
    Covector
);

impl ConfigurationPoint {
    /// `q_{k+1/2}`.
    pub fn midpoint(self, next: ConfigurationPoint) -> ConfigurationPoint {
        (self + next) * 0.5
    }

    /// Difference quotient `(next - self) / h`.
    pub fn velocity_to(self, next: ConfigurationPoint, h: f64) -> Velocity {
        Velocity::new((next.phi - self.phi) / h, (next.s - self.s) / h)
    }

    pub fn displaced(self, v: Velocity, dt: f64) -> ConfigurationPoint {
        ConfigurationPoint::new(self.phi + dt * v.phi, self.s + dt * v.s)
    }
}

impl Covector {
    /// Pairing with a velocity.
    pub fn pair(&self, v: Velocity) -> f64 {
        self.phi * v.phi + self.s * v.s
    }
}

/// A discrete phase point `(q_{k-1}, q_k)` on `Q × Q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteState {
    pub q_prev: ConfigurationPoint,
    pub q_curr: ConfigurationPoint,
    pub k: usize,
}

impl DiscreteState {
    pub fn new(q_prev: ConfigurationPoint, q_curr: ConfigurationPoint, k: usize) -> Self {
        Self { q_prev, q_curr, k }
    }

    pub fn advance(&self, q_next: ConfigurationPoint) -> Self {
        Self::new(self.q_curr, q_next, self.k + 1)
    }
}

/// Two-point discrete Lagrangian with its slot derivatives.
pub trait DiscreteLagrangian {
    fn time_step(&self) -> f64;

    fn value(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> f64;

    /// Derivative with respect to the first argument.
    fn d1(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector;

    /// Derivative with respect to the second argument.
    fn d2(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector;

    /// Energy associated with the step `(q0, q1)`, when the model defines one.
    fn discrete_energy(&self, _q0: ConfigurationPoint, _q1: ConfigurationPoint) -> Option<f64> {
        None
    }
}

/// Continuous Legendre transform `∂L/∂q̇`, needed to start from `(q0, v0)`.
pub trait LegendreTransform {
    fn momentum(&self, q: ConfigurationPoint, v: Velocity) -> Covector;
}

/// A continuous Lagrangian `L(q, q̇)` with analytic gradients.
pub trait ContinuousLagrangian {
    fn value(&self, q: ConfigurationPoint, v: Velocity) -> f64;

    /// `∂L/∂q`.
    fn dq(&self, q: ConfigurationPoint, v: Velocity) -> Covector;

    /// `∂L/∂q̇`.
    fn dv(&self, q: ConfigurationPoint, v: Velocity) -> Covector;

    fn energy(&self, q: ConfigurationPoint, v: Velocity) -> f64 {
        self.dv(q, v).pair(v) - self.value(q, v)
    }
}

/// Second-order midpoint discretization `L^d(q0, q1) = h L((q0+q1)/2, (q1-q0)/h)`.
#[derive(Clone, Debug)]
pub struct MidpointLagrangian<L> {
    pub lagrangian: L,
    pub h: f64,
}

impl<L> MidpointLagrangian<L> {
    pub fn new(lagrangian: L, h: f64) -> Self {
        Self { lagrangian, h }
    }
}

impl<L: ContinuousLagrangian> DiscreteLagrangian for MidpointLagrangian<L> {
    fn time_step(&self) -> f64 {
        self.h
    }

    fn value(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> f64 {
        self.h * self.lagrangian.value(q0.midpoint(q1), q0.velocity_to(q1, self.h))
    }

    fn d1(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector {
        let (q, v) = (q0.midpoint(q1), q0.velocity_to(q1, self.h));
        self.lagrangian.dq(q, v) * (0.5 * self.h) - self.lagrangian.dv(q, v)
    }

    fn d2(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector {
        let (q, v) = (q0.midpoint(q1), q0.velocity_to(q1, self.h));
        self.lagrangian.dq(q, v) * (0.5 * self.h) + self.lagrangian.dv(q, v)
    }

    fn discrete_energy(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Option<f64> {
        Some(self.lagrangian.energy(q0.midpoint(q1), q0.velocity_to(q1, self.h)))
    }
}

impl<L: ContinuousLagrangian> LegendreTransform for MidpointLagrangian<L> {
    fn momentum(&self, q: ConfigurationPoint, v: Velocity) -> Covector {
        self.lagrangian.dv(q, v)
    }
}

/// Discrete Lagrange–d'Alembert force, split into its two slot maps.
///
/// `f1(q_k, q_{k+1})` acts on the equation at node `k`, `f2(q_{k-1}, q_k)` on
/// the equation at node `k`. Feedback laws that depend on the unknown
/// `q_{k+1}` enter through `f1` and are solved for implicitly.
pub trait DiscreteForce {
    fn f1(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector;

    fn f2(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector;

    /// Scalar control input at node `k` for trajectory records.
    fn control_input(
        &self,
        _q_prev: ConfigurationPoint,
        _q_curr: ConfigurationPoint,
        _q_next: ConfigurationPoint,
    ) -> Option<f64> {
        None
    }

    /// Momentum to record for the step `(q_k, q_{k+1})`, overriding the
    /// model's discrete Legendre transform.
    fn momentum(&self, _q0: ConfigurationPoint, _q1: ConfigurationPoint) -> Option<f64> {
        None
    }

    /// Energy to record for the step `(q_k, q_{k+1})`, overriding the model's.
    fn energy(&self, _q0: ConfigurationPoint, _q1: ConfigurationPoint) -> Option<f64> {
        None
    }
}

impl<T: DiscreteForce + ?Sized> DiscreteForce for &T {
    fn f1(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector {
        (**self).f1(q0, q1)
    }
    fn f2(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Covector {
        (**self).f2(q0, q1)
    }
    fn control_input(
        &self,
        q_prev: ConfigurationPoint,
        q_curr: ConfigurationPoint,
        q_next: ConfigurationPoint,
    ) -> Option<f64> {
        (**self).control_input(q_prev, q_curr, q_next)
    }
    fn momentum(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Option<f64> {
        (**self).momentum(q0, q1)
    }
    fn energy(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> Option<f64> {
        (**self).energy(q0, q1)
    }
}

/// `F^d ≡ 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Unforced;

impl DiscreteForce for Unforced {
    fn f1(&self, _: ConfigurationPoint, _: ConfigurationPoint) -> Covector {
        Covector::ZERO
    }
    fn f2(&self, _: ConfigurationPoint, _: ConfigurationPoint) -> Covector {
        Covector::ZERO
    }
}

/// A constant impulse per node, split evenly between the two slots.
#[derive(Clone, Copy, Debug)]
pub struct ConstantForce {
    pub impulse: Covector,
}

impl DiscreteForce for ConstantForce {
    fn f1(&self, _: ConfigurationPoint, _: ConfigurationPoint) -> Covector {
        self.impulse * 0.5
    }
    fn f2(&self, _: ConfigurationPoint, _: ConfigurationPoint) -> Covector {
        self.impulse * 0.5
    }
}

/// Root-solver controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Convergence threshold on the residual ∞-norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative finite-difference step; the absolute step is `fd_step * max(1, |x|)`.
    pub fd_step: f64,
    /// Step halvings allowed when a Newton step fails to reduce the residual.
    pub max_halvings: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            fd_step: 1e-7,
            max_halvings: 30,
        }
    }
}

impl SolverSettings {
    pub fn new(tol: f64, max_iter: usize, fd_step: f64) -> Result<Self> {
        let s = Self {
            tol,
            max_iter,
            fd_step,
            ..Self::default()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "fd_step must be positive, got {}",
                self.fd_step
            )));
        }
        Ok(())
    }
}
