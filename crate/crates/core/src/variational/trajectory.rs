use serde::{Deserialize, Serialize};

use super::{ConfigurationPoint, DiscreteForce, DiscreteLagrangian};

/// A simulated configuration sequence with per-node records.
///
/// All record vectors have the same length as `points`. `controls[k]` is the
/// input applied at node `k` (absent at the two end nodes). `momenta[k]` and
/// `energies[k]` belong to the step `(q_k, q_{k+1})` and are absent for the
/// final node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub h: f64,
    pub points: Vec<ConfigurationPoint>,
    pub controls: Vec<Option<f64>>,
    pub momenta: Vec<Option<f64>>,
    pub energies: Vec<Option<f64>>,
}

impl Trajectory {
    /// Builds the records for a solved point sequence.
    ///
    /// Momentum defaults to the `s`-component of `-D1 L^d(q_k, q_{k+1})`.
    pub fn record<L, F>(model: &L, force: &F, points: Vec<ConfigurationPoint>) -> Self
    where
        L: DiscreteLagrangian + ?Sized,
        F: DiscreteForce + ?Sized,
    {
        let n = points.len();
        let mut controls = vec![None; n];
        let mut momenta = vec![None; n];
        let mut energies = vec![None; n];
        for k in 0..n.saturating_sub(1) {
            let (q0, q1) = (points[k], points[k + 1]);
            momenta[k] = force.momentum(q0, q1).or(Some(-model.d1(q0, q1).s));
            energies[k] = force.energy(q0, q1).or_else(|| model.discrete_energy(q0, q1));
            if k > 0 {
                controls[k] = force.control_input(points[k - 1], q0, q1);
            }
        }
        Self {
            h: model.time_step(),
            points,
            controls,
            momenta,
            energies,
        }
    }

    /// Number of steps, one less than the number of points.
    pub fn steps(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points.len()).map(move |k| k as f64 * self.h)
    }

    pub fn phi(&self) -> Vec<f64> {
        self.points.iter().map(|q| q.phi).collect()
    }

    pub fn s(&self) -> Vec<f64> {
        self.points.iter().map(|q| q.s).collect()
    }

    pub fn last(&self) -> ConfigurationPoint {
        *self.points.last().expect("trajectory is never empty")
    }

    /// Largest `|p_k - p_0|` over the recorded momenta.
    pub fn momentum_drift(&self) -> Option<f64> {
        let values: Vec<f64> = self.momenta.iter().flatten().copied().collect();
        let first = *values.first()?;
        Some(values.iter().map(|p| (p - first).abs()).fold(0.0, f64::max))
    }

    /// `max E - min E` over the recorded energies.
    pub fn energy_band(&self) -> Option<f64> {
        let values: Vec<f64> = self.energies.iter().flatten().copied().collect();
        if values.is_empty() {
            return None;
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(hi - lo)
    }
}
