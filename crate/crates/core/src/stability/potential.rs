use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};

use super::kinetic::{kinetic_damped_map, kinetic_spectral_condition, linearized_kinetic_map};
use super::linear::{recurrence_map, LinearUpdateMap};
use crate::cart_pendulum::{CartPendulum, ModelParameters};
use crate::error::Result;
use crate::shaping::{x_slope, ControllerGains, ShapingMode};
use crate::variational::ConfigurationPoint;

/// Quadratic approximation of the potential-shaping controlled Lagrangian at
/// the equilibrium:
///
/// ```text
/// 𝓛^d(q_k, q_{k+1}) = (1/2h) Δqᵀ M Δq − (h/2) q_{k+½}ᵀ K q_{k+½}
/// ```
///
/// `M` is the frozen controlled metric and `K` the Hessian of `V₁ + V_ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticModel {
    pub mass: Matrix2<f64>,
    pub stiffness: Matrix2<f64>,
    /// `φ`-coefficient of the linear shaped coordinate `x = s + eφ`.
    pub x_slope: f64,
    pub h: f64,
}

impl QuadraticModel {
    pub fn new(params: &ModelParameters, gains: &ControllerGains) -> Result<Self> {
        gains.check_potential()?;
        let model = CartPendulum::new(*params);
        let c = params.metric_coeffs(0.0);
        let (alpha, beta, gamma) = (c.alpha, c.beta, c.gamma);
        let (sigma, rho) = (gains.sigma, gains.rho);
        let tau = gains.kappa * beta;

        let m_pp = alpha
            + 2.0 * beta * tau
            + gamma * tau * tau
            + sigma * gamma * tau * tau
            + (rho - 1.0) * gamma * (sigma - 1.0).powi(2) * tau * tau;
        let m_ps = beta + gamma * tau - (rho - 1.0) * gamma * (sigma - 1.0) * tau;
        let m_ss = rho * gamma;

        let e = x_slope(&model, gains);
        let v1 = -params.pendulum_stiffness();
        let ve = -gains.epsilon;
        Ok(Self {
            mass: Matrix2::new(m_pp, m_ps, m_ps, m_ss),
            stiffness: Matrix2::new(v1 + ve * e * e, ve * e, ve * e, ve),
            x_slope: e,
            h: params.time_step,
        })
    }

    fn x_direction(&self) -> Vector2<f64> {
        Vector2::new(self.x_slope, 1.0)
    }

    /// Recurrence with linear damping `D`: the `(φ, s)` residuals receive
    /// `(e, 1)·D(Δx_{k−1} + Δx_k)/(2h)`.
    pub fn map(&self, linear_d: f64) -> Result<LinearUpdateMap> {
        let h = self.h;
        let g = self.x_direction();
        let damp = g * g.transpose() * (linear_d / (2.0 * h));
        let (m, k) = (self.mass, self.stiffness);
        let next = -m / h - k * (h / 4.0) + damp;
        let curr = m * (2.0 / h) - k * (h / 2.0);
        let prev = -m / h - k * (h / 4.0) - damp;
        let dm = |a: Matrix2<f64>| DMatrix::from_iterator(2, 2, a.iter().copied());
        recurrence_map(&dm(next), &dm(curr), &dm(prev), h)
    }

    /// `E_{k,k+1} = (1/2h)ΔqᵀMΔq + (h/2)q_{k+½}ᵀKq_{k+½}`.
    pub fn energy(&self, q0: ConfigurationPoint, q1: ConfigurationPoint) -> f64 {
        let d = Vector2::new(q1.phi - q0.phi, q1.s - q0.s);
        let mid = Vector2::new(0.5 * (q0.phi + q1.phi), 0.5 * (q0.s + q1.s));
        (d.transpose() * self.mass * d)[0] / (2.0 * self.h) + 0.5 * self.h * (mid.transpose() * self.stiffness * mid)[0]
    }

    pub fn x(&self, q: ConfigurationPoint) -> f64 {
        q.s + self.x_slope * q.phi
    }

    /// Energy form in the variables `(Δq/h, q_{k+½})`.
    pub fn energy_form(&self) -> QuadraticEnergy {
        let mut a = DMatrix::zeros(4, 4);
        let half_h = 0.5 * self.h;
        for i in 0..2 {
            for j in 0..2 {
                a[(i, j)] = half_h * self.mass[(i, j)];
                a[(i + 2, j + 2)] = half_h * self.stiffness[(i, j)];
            }
        }
        QuadraticEnergy { coefficients: a }
    }
}

/// A symmetric quadratic form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticEnergy {
    pub coefficients: DMatrix<f64>,
}

impl QuadraticEnergy {
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.coefficients.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// All eigenvalues below `−threshold`.
    pub fn is_negative_definite(&self, threshold: f64) -> bool {
        self.eigenvalues().last().is_some_and(|&top| top < -threshold)
    }

    pub fn evaluate(&self, z: &DVector<f64>) -> f64 {
        (z.transpose() * &self.coefficients * z)[0]
    }
}

/// Conservative linearization of the potential-shaping closed loop on
/// `(φ_{k−1}, s_{k−1}, φ_k, s_k)`.
pub fn linearized_potential_map(params: &ModelParameters, gains: &ControllerGains) -> Result<LinearUpdateMap> {
    QuadraticModel::new(params, gains)?.map(0.0)
}

/// Linearization with damping `linear_d` applied directly to the linear
/// controlled equations.
pub fn potential_damped_map(params: &ModelParameters, gains: &ControllerGains, linear_d: f64) -> Result<LinearUpdateMap> {
    QuadraticModel::new(params, gains)?.map(linear_d)
}

/// Linearization of a closed loop whose control carries the damping gain
/// `gains.dissipation`.
///
/// For the potential modes the physical cart equation is `ρ` times the
/// controlled one near the equilibrium, so a gain `D` in `u_k` acts as
/// `ρD` in the linear controlled equations.
pub fn damped_linear_map(params: &ModelParameters, gains: &ControllerGains, mode: ShapingMode) -> Result<LinearUpdateMap> {
    match mode {
        ShapingMode::Kinetic => linearized_kinetic_map(params, gains),
        ShapingMode::KineticDissipative => kinetic_damped_map(params, gains),
        ShapingMode::Potential => linearized_potential_map(params, gains),
        ShapingMode::PotentialDissipative => potential_damped_map(params, gains, gains.rho * gains.dissipation),
    }
}

/// Verdict for the potential-shaping stability conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialCertificate {
    pub sigma_in_window: bool,
    pub rho_negative: bool,
    pub shaped_potential_concave: bool,
    /// Eigenvalues of the quadratic energy form, ascending.
    pub energy_eigenvalues: Vec<f64>,
    pub energy_negative_definite: bool,
}

impl PotentialCertificate {
    /// The three stability conditions jointly.
    pub fn holds(&self) -> bool {
        self.sigma_in_window && self.rho_negative && self.shaped_potential_concave
    }
}

/// `−β(0)²/(αγ − β(0)²) < σ < 0`, `ρ < 0`, `V_ε″(0) < 0`, with the energy
/// definiteness certificate.
pub fn potential_spectral_condition(params: &ModelParameters, gains: &ControllerGains) -> Result<PotentialCertificate> {
    let kinetic = kinetic_spectral_condition(params)?;
    let form = QuadraticModel::new(params, gains)?.energy_form();
    let ev = form.eigenvalues();
    Ok(PotentialCertificate {
        sigma_in_window: kinetic.sigma_in_window(gains.sigma),
        rho_negative: gains.rho < 0.0,
        shaped_potential_concave: -gains.epsilon < 0.0,
        energy_negative_definite: form.is_negative_definite(1e-12 * ev.iter().map(|v| v.abs()).fold(0.0, f64::max)),
        energy_eigenvalues: ev,
    })
}

/// Largest residual of `E_{k,k+1} − E_{k−1,k} − D h ((Δx_{k−1} + Δx_k)/(2h))²`
/// along `points`, for the linear damping `linear_d`.
pub fn energy_balance_check(model: &QuadraticModel, points: &[ConfigurationPoint], linear_d: f64) -> f64 {
    energy_balance_with_factor(model, points, linear_d, 1.0)
}

/// As [`energy_balance_check`] with the increment scaled by `factor`.
pub fn energy_balance_with_factor(model: &QuadraticModel, points: &[ConfigurationPoint], linear_d: f64, factor: f64) -> f64 {
    let h = model.h;
    points
        .windows(3)
        .map(|w| {
            let e_prev = model.energy(w[0], w[1]);
            let e_next = model.energy(w[1], w[2]);
            let rate = (model.x(w[2]) - model.x(w[0])) / (2.0 * h);
            (e_next - e_prev - factor * linear_d * h * rate * rate).abs()
        })
        .fold(0.0, f64::max)
}

/// Unstacks an orbit of a 4-dimensional map into configurations.
pub fn orbit_points(orbit: &[DVector<f64>]) -> Vec<ConfigurationPoint> {
    let mut pts = Vec::with_capacity(orbit.len() + 1);
    if let Some(first) = orbit.first() {
        pts.push(ConfigurationPoint::new(first[0], first[1]));
    }
    pts.extend(orbit.iter().map(|z| ConfigurationPoint::new(z[2], z[3])));
    pts
}
