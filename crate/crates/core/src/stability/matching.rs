use serde::{Deserialize, Serialize};

use crate::cart_pendulum::CartPendulum;
use crate::error::{Error, Result};
use crate::shaping::{ClosedLoopForce, ControllerGains, ShapeForcing, ShapedLagrangian, ShapingMode};
use crate::variational::{simulate, ConfigurationPoint, DiscreteLagrangian, SolverSettings, Unforced};

/// Which equivalence between closed loop and controlled Lagrangian to check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchingVariant {
    /// Kinetic shaping; the controlled side runs at level `gains.mu`.
    Kinetic,
    /// Alternative kinetic shaping with `λ`; the controlled side runs at level `gains.p`.
    Alternative,
    /// Potential shaping with the shape-equation forcing on the controlled side.
    Potential,
    /// Potential shaping with the forcing left out, as a negative control.
    PotentialUnforced,
}

/// Largest pointwise differences between the two simulated sequences.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingDeviation {
    pub phi: f64,
    pub s: f64,
    pub steps: usize,
}

/// Initial pair with shape data of `(q0, q1)` and controlled momentum `level`.
fn at_level(model: &CartPendulum, kappa: f64, q0: ConfigurationPoint, q1: ConfigurationPoint, level: f64) -> ConfigurationPoint {
    let gamma = model.gamma();
    let beta = model.beta(0.5 * (q0.phi + q1.phi));
    let ds = (model.h() * level - (1.0 + gamma * kappa) * beta * (q1.phi - q0.phi)) / gamma;
    ConfigurationPoint::new(q1.phi, q0.s + ds)
}

/// Simulates the closed loop and the controlled-Lagrangian dynamics for `n`
/// steps and compares them.
///
/// The closed loop starts from `(q0, q1)`. For the kinetic variants only the
/// shape sequences are comparable, and the controlled side keeps the shape
/// data but adjusts `s_1` to its momentum level. For the potential variants
/// both start from `(q0, q1)` and both sequences are compared.
pub fn verify_matching_equivalence(
    model: &CartPendulum,
    gains: &ControllerGains,
    variant: MatchingVariant,
    q0: ConfigurationPoint,
    q1: ConfigurationPoint,
    n: usize,
    settings: &SolverSettings,
) -> Result<MatchingDeviation> {
    let physical = model.discrete_lagrangian();
    let (mode, potential) = match variant {
        MatchingVariant::Kinetic | MatchingVariant::Alternative => (ShapingMode::Kinetic, false),
        MatchingVariant::Potential | MatchingVariant::PotentialUnforced => (ShapingMode::Potential, true),
    };
    let force = ClosedLoopForce::new(*model, *gains, mode)?;
    let closed = simulate(&physical, &force, q0, q1, n, settings)?;

    let controlled = match variant {
        MatchingVariant::Kinetic => {
            let ld = ShapedLagrangian::kinetic(*model, gains).discretize();
            simulate(&ld, &Unforced, q0, at_level(model, gains.kappa, q0, q1, gains.mu), n, settings)?
        }
        MatchingVariant::Alternative => {
            let ld = ShapedLagrangian::alternative(*model, gains).discretize();
            simulate(&ld, &Unforced, q0, at_level(model, gains.kappa, q0, q1, gains.p), n, settings)?
        }
        MatchingVariant::Potential => {
            let ld = ShapedLagrangian::potential(*model, gains)?.discretize();
            simulate(&ld, &ShapeForcing::new(*model, *gains)?, q0, q1, n, settings)?
        }
        MatchingVariant::PotentialUnforced => {
            let ld = ShapedLagrangian::potential(*model, gains)?.discretize();
            simulate(&ld, &Unforced, q0, q1, n, settings)?
        }
    };

    let mut dev = MatchingDeviation {
        phi: 0.0,
        s: 0.0,
        steps: n,
    };
    for (a, b) in closed.points.iter().zip(&controlled.points) {
        dev.phi = dev.phi.max((a.phi - b.phi).abs());
        if potential {
            dev.s = dev.s.max((a.s - b.s).abs());
        }
    }
    Ok(dev)
}

/// Shape residual of a discrete Lagrangian on the momentum level `level`,
/// after eliminating `Δs` through the momentum `[(1+γκ)β(φ_{k+½})Δφ + γΔs]/h`.
fn reduced_shape_residual<L: DiscreteLagrangian>(
    ld: &L,
    model: &CartPendulum,
    kappa: f64,
    level: f64,
    phi: [f64; 3],
) -> f64 {
    let q0 = ConfigurationPoint::new(phi[0], 0.0);
    let q1 = at_level(model, kappa, q0, ConfigurationPoint::new(phi[1], 0.0), level);
    let q2 = at_level(model, kappa, q1, ConfigurationPoint::new(phi[2], 0.0), level);
    ld.d1(q1, q2).phi + ld.d2(q0, q1).phi
}

/// Difference between the reduced shape equations of the kinetic closed loop
/// at level `p` and the kinetic controlled Lagrangian at level `mu`.
pub fn kinetic_reduced_mismatch(model: &CartPendulum, gains: &ControllerGains, phi: [f64; 3]) -> f64 {
    let controlled = ShapedLagrangian::kinetic(*model, gains).discretize();
    reduced_shape_residual(&controlled, model, gains.kappa, gains.mu, phi)
        - reduced_shape_residual(&model.discrete_lagrangian(), model, gains.kappa, gains.p, phi)
}

/// As [`kinetic_reduced_mismatch`] for the alternative Lagrangian, both at level `p`.
pub fn alternative_reduced_mismatch(model: &CartPendulum, gains: &ControllerGains, phi: [f64; 3]) -> f64 {
    let controlled = ShapedLagrangian::alternative(*model, gains).discretize();
    reduced_shape_residual(&controlled, model, gains.kappa, gains.p, phi)
        - reduced_shape_residual(&model.discrete_lagrangian(), model, gains.kappa, gains.p, phi)
}

/// `h[a·∂_{φ_k}(β₊Δφ_k/h + β₋Δφ_{k−1}/h) + ((κ + γσκ²)/2)·∂_{φ_k}(β₊²(Δφ_k/h)² + β₋²(Δφ_{k−1}/h)²)]`.
fn obstruction(model: &CartPendulum, kappa: f64, sigma: f64, level_coeff: f64, phi: [f64; 3]) -> f64 {
    let h = model.h();
    let (up, dn) = (0.5 * (phi[1] + phi[2]), 0.5 * (phi[0] + phi[1]));
    let (d_up, d_dn) = ((phi[2] - phi[1]) / h, (phi[1] - phi[0]) / h);
    let (b_up, b_dn) = (model.beta(up), model.beta(dn));
    let (bp_up, bp_dn) = (model.beta_prime(up), model.beta_prime(dn));
    let linear = 0.5 * bp_up * d_up - b_up / h + 0.5 * bp_dn * d_dn + b_dn / h;
    let quadratic = b_up * bp_up * d_up * d_up - 2.0 * b_up * b_up * d_up / h + b_dn * bp_dn * d_dn * d_dn
        + 2.0 * b_dn * b_dn * d_dn / h;
    let gamma = model.gamma();
    h * (level_coeff * linear + 0.5 * (kappa + gamma * sigma * kappa * kappa) * quadratic)
}

/// Obstruction to kinetic matching, with level coefficient `(μ − p + γκμ)/γ`.
pub fn kinetic_obstruction(model: &CartPendulum, gains: &ControllerGains, phi: [f64; 3]) -> Result<f64> {
    check_shape(phi)?;
    let gamma = model.gamma();
    let coeff = (gains.mu - gains.p + gamma * gains.kappa * gains.mu) / gamma;
    Ok(obstruction(model, gains.kappa, gains.sigma, coeff, phi))
}

/// Obstruction to alternative matching, with level coefficient `κp + κλ`.
pub fn alternative_obstruction(model: &CartPendulum, gains: &ControllerGains, phi: [f64; 3]) -> Result<f64> {
    check_shape(phi)?;
    let coeff = gains.kappa * (gains.p + gains.lambda);
    Ok(obstruction(model, gains.kappa, gains.sigma, coeff, phi))
}

fn check_shape(phi: [f64; 3]) -> Result<()> {
    if phi.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument("shape triple contains a non-finite value".into()))
    }
}
