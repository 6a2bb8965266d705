use serde::{Deserialize, Serialize};

use crate::cart_pendulum::ModelParameters;
use crate::error::{Error, Result};

/// Controller parameters shared by all shaping laws.
///
/// Unused fields are inert: kinetic shaping ignores `rho` and `epsilon`, and
/// only the alternative controlled Lagrangian reads `lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    /// Kinetic gain `κ`, with velocity shift `τ(φ) = κβ(φ)`.
    pub kappa: f64,
    /// Kinetic metric parameter `σ`.
    pub sigma: f64,
    /// Potential-shaping parameter `ρ`.
    pub rho: f64,
    /// Strength `ε ≥ 0` of the shaped potential `V_ε(y) = −(ε/2)y²`.
    pub epsilon: f64,
    /// Momentum shift of the alternative controlled Lagrangian.
    pub lambda: f64,
    /// Dissipation gain `D` of the damping term added to the control.
    pub dissipation: f64,
    /// Physical momentum level.
    pub p: f64,
    /// Controlled momentum level.
    pub mu: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            kappa: 0.0,
            sigma: 0.0,
            rho: 1.0,
            epsilon: 0.0,
            lambda: 0.0,
            dissipation: 0.0,
            p: 0.0,
            mu: 0.0,
        }
    }
}

/// `σ = −1/(γκ)` and `μ = p/(1+γκ)`.
pub fn kinetic_matching_gains(params: &ModelParameters, kappa: f64, p: f64) -> Result<(f64, f64)> {
    let gamma = params.gamma();
    let sigma = matched_sigma(gamma, kappa)?;
    let denom = 1.0 + gamma * kappa;
    if denom == 0.0 {
        return Err(Error::DegenerateGain(format!("1 + γκ vanishes for κ = {kappa}")));
    }
    Ok((sigma, p / denom))
}

/// `σ = −1/(γκ)` and `λ = −p`.
pub fn alternative_matching_gains(params: &ModelParameters, kappa: f64, p: f64) -> Result<(f64, f64)> {
    let (sigma, _) = kinetic_matching_gains(params, kappa, p)?;
    Ok((sigma, -p))
}

fn matched_sigma(gamma: f64, kappa: f64) -> Result<f64> {
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(Error::DegenerateGain(format!("matching needs a finite nonzero κ, got {kappa}")));
    }
    Ok(-1.0 / (gamma * kappa))
}

impl ControllerGains {
    /// Kinetic shaping with matched `σ` and `μ` for momentum level `p`.
    pub fn kinetic(params: &ModelParameters, kappa: f64, p: f64) -> Result<Self> {
        let (sigma, mu) = kinetic_matching_gains(params, kappa, p)?;
        Ok(Self {
            kappa,
            sigma,
            p,
            mu,
            ..Self::default()
        })
    }

    /// Alternative kinetic shaping: matched `σ`, `λ = −p`, both sides at level `p`.
    pub fn alternative(params: &ModelParameters, kappa: f64, p: f64) -> Result<Self> {
        let (sigma, lambda) = alternative_matching_gains(params, kappa, p)?;
        Ok(Self {
            kappa,
            sigma,
            lambda,
            p,
            mu: p,
            ..Self::default()
        })
    }

    /// Potential shaping with `σ = −1/(γκ)`.
    pub fn potential(params: &ModelParameters, kappa: f64, rho: f64, epsilon: f64) -> Result<Self> {
        let sigma = matched_sigma(params.gamma(), kappa)?;
        let g = Self {
            kappa,
            sigma,
            rho,
            epsilon,
            ..Self::default()
        };
        g.check_potential()?;
        Ok(g)
    }

    pub fn with_dissipation(mut self, d: f64) -> Self {
        self.dissipation = d;
        self
    }

    /// `σ` is within relative `1e-12` of `−1/(γκ)`.
    pub fn sigma_is_matched(&self, params: &ModelParameters) -> bool {
        match matched_sigma(params.gamma(), self.kappa) {
            Ok(s) => (self.sigma - s).abs() <= 1e-12 * s.abs(),
            Err(_) => false,
        }
    }

    /// Requirements for the potential-shaping formulas to be defined.
    pub fn check_potential(&self) -> Result<()> {
        if self.rho == 0.0 || !self.rho.is_finite() {
            return Err(Error::DegenerateGain(format!("ρ must be finite and nonzero, got {}", self.rho)));
        }
        if self.sigma == 0.0 || !self.sigma.is_finite() {
            return Err(Error::DegenerateGain(format!("σ must be finite and nonzero, got {}", self.sigma)));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::DegenerateGain(format!("ε must be finite and ≥ 0, got {}", self.epsilon)));
        }
        Ok(())
    }

    /// `(1/σ − (ρ−1)/ρ)/γ`, the factor multiplying `∫β` in the shaped coordinate `y`.
    pub fn shape_coefficient(&self, gamma: f64) -> f64 {
        (1.0 / self.sigma - (self.rho - 1.0) / self.rho) / gamma
    }

    /// `1 − σ + σ/ρ`, the prefactor of the shape-equation forcing.
    pub fn forcing_prefactor(&self) -> f64 {
        1.0 - self.sigma + self.sigma / self.rho
    }
}

/// A shaped potential `V_ε(y)` in the group-like coordinate `y`.
pub trait ShapedPotential {
    fn value(&self, y: f64) -> f64;
    fn derivative(&self, y: f64) -> f64;
    fn second_derivative(&self, y: f64) -> f64;
}

/// `V_ε(y) = −(ε/2) y²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticPotential {
    pub epsilon: f64,
}

impl ShapedPotential for QuadraticPotential {
    fn value(&self, y: f64) -> f64 {
        -0.5 * self.epsilon * y * y
    }
    fn derivative(&self, y: f64) -> f64 {
        -self.epsilon * y
    }
    fn second_derivative(&self, _y: f64) -> f64 {
        -self.epsilon
    }
}
