use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A linear update `z_{k+1} = A z_k` on stacked consecutive configurations.
///
/// For the shape-only case `z_k = (φ_{k−1}, φ_k)`; for the full case
/// `z_k = (φ_{k−1}, s_{k−1}, φ_k, s_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearUpdateMap {
    pub matrix: DMatrix<f64>,
    pub h: f64,
}

impl LinearUpdateMap {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenvalues sorted by increasing modulus, ties by argument.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let mut ev: Vec<Complex64> = self.matrix.clone().complex_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.arg().total_cmp(&b.arg())));
        ev
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Every eigenvalue has modulus within `tol` of 1.
    pub fn on_unit_circle(&self, tol: f64) -> bool {
        self.eigenvalues().iter().all(|z| (z.norm() - 1.0).abs() <= tol)
    }

    pub fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.matrix * z
    }

    /// Orbit of `n` applications starting from `z0`, including `z0`.
    pub fn orbit(&self, z0: DVector<f64>, n: usize) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(z0);
        for _ in 0..n {
            let next = self.apply(out.last().expect("non-empty"));
            out.push(next);
        }
        out
    }
}

/// Companion-form map of the three-term recurrence
/// `next·q_{k+1} + curr·q_k + prev·q_{k−1} = 0` with `d × d` blocks.
pub(crate) fn recurrence_map(
    next: &DMatrix<f64>,
    curr: &DMatrix<f64>,
    prev: &DMatrix<f64>,
    h: f64,
) -> Result<LinearUpdateMap> {
    let d = next.nrows();
    let lu = next.clone().lu();
    let inv = lu
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::DegenerateLinearization("leading block of the linear recurrence is singular".into()))?;
    let mut a = DMatrix::zeros(2 * d, 2 * d);
    a.view_mut((0, d), (d, d)).copy_from(&DMatrix::identity(d, d));
    a.view_mut((d, 0), (d, d)).copy_from(&(-&inv * prev));
    a.view_mut((d, d), (d, d)).copy_from(&(-&inv * curr));
    Ok(LinearUpdateMap { matrix: a, h })
}
