use nalgebra::{DMatrix, DVector};

use super::SolverSettings;
use crate::error::{Error, Result};

/// Result of a converged Newton solve.
#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

fn norm_inf(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| if x.is_nan() { f64::NAN } else { acc.max(x.abs()) })
}

fn fd_jacobian<F>(residual: &mut F, x: &DVector<f64>, rel_step: f64) -> DMatrix<f64>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut probe = x.clone();
    for j in 0..n {
        let dx = rel_step * x[j].abs().max(1.0);
        probe[j] = x[j] + dx;
        let plus = residual(&probe);
        probe[j] = x[j] - dx;
        let minus = residual(&probe);
        probe[j] = x[j];
        jac.set_column(j, &((plus - minus) / (2.0 * dx)));
    }
    jac
}

/// Damped Newton iteration with a central finite-difference Jacobian.
///
/// Stops as soon as `‖residual(x)‖∞ ≤ tol`. A step that does not decrease the
/// residual norm is halved up to `max_halvings` times before giving up.
pub fn newton_solve<F>(mut residual: F, guess: DVector<f64>, settings: &SolverSettings) -> Result<NewtonOutcome>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    settings.validate()?;
    let mut x = guess;
    let mut r = residual(&x);
    let mut norm = norm_inf(&r);

    for iteration in 0..settings.max_iter {
        if norm <= settings.tol {
            return Ok(NewtonOutcome {
                x,
                iterations: iteration,
                residual_norm: norm,
            });
        }
        if !norm.is_finite() {
            break;
        }

        let jac = fd_jacobian(&mut residual, &x, settings.fd_step);
        let dx = jac
            .lu()
            .solve(&(-&r))
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or(Error::SingularJacobian { iteration })?;

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=settings.max_halvings {
            let trial = &x + &dx * scale;
            let r_trial = residual(&trial);
            let n_trial = norm_inf(&r_trial);
            if n_trial < norm {
                accepted = Some((trial, r_trial, n_trial));
                break;
            }
            scale *= 0.5;
        }
        match accepted {
            Some((xn, rn, nn)) => {
                x = xn;
                r = rn;
                norm = nn;
            }
            None => {
                return Err(Error::NonConvergence {
                    iterations: iteration + 1,
                    residual: norm,
                })
            }
        }
    }

    if norm <= settings.tol {
        return Ok(NewtonOutcome {
            x,
            iterations: settings.max_iter,
            residual_norm: norm,
        });
    }
    Err(Error::NonConvergence {
        iterations: settings.max_iter,
        residual: norm,
    })
}
