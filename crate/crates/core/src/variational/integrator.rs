use nalgebra::DVector;

use super::{
    newton_solve, ConfigurationPoint, Covector, DiscreteForce, DiscreteLagrangian, DiscreteState, LegendreTransform,
    SolverSettings, Trajectory, Velocity,
};
use crate::error::{Error, Result};

fn check_finite(points: &[ConfigurationPoint]) -> Result<()> {
    if points.iter().all(ConfigurationPoint::is_finite) {
        Ok(())
    } else {
        Err(Error::InvalidArgument("configuration contains a non-finite value".into()))
    }
}

fn to_dvector(c: Covector) -> DVector<f64> {
    DVector::from_vec(vec![c.phi, c.s])
}

/// `Σ L^d(q_k, q_{k+1})` along `path`.
pub fn discrete_action<L: DiscreteLagrangian + ?Sized>(model: &L, path: &[ConfigurationPoint]) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "discrete action needs at least 2 points, got {}",
            path.len()
        )));
    }
    Ok(path.windows(2).map(|w| model.value(w[0], w[1])).sum())
}

/// `D1 L^d(q_curr, q_next) + D2 L^d(q_prev, q_curr)`.
pub fn del_residual<L: DiscreteLagrangian + ?Sized>(
    model: &L,
    q_prev: ConfigurationPoint,
    q_curr: ConfigurationPoint,
    q_next: ConfigurationPoint,
) -> Result<Covector> {
    check_finite(&[q_prev, q_curr, q_next])?;
    Ok(model.d1(q_curr, q_next) + model.d2(q_prev, q_curr))
}

/// DEL residual plus `F^d_1(q_curr, q_next) + F^d_2(q_prev, q_curr)`.
pub fn forced_del_residual<L, F>(
    model: &L,
    force: &F,
    q_prev: ConfigurationPoint,
    q_curr: ConfigurationPoint,
    q_next: ConfigurationPoint,
) -> Result<Covector>
where
    L: DiscreteLagrangian + ?Sized,
    F: DiscreteForce + ?Sized,
{
    check_finite(&[q_prev, q_curr, q_next])?;
    Ok(raw_residual(model, force, q_prev, q_curr, q_next))
}

fn raw_residual<L, F>(
    model: &L,
    force: &F,
    q_prev: ConfigurationPoint,
    q_curr: ConfigurationPoint,
    q_next: ConfigurationPoint,
) -> Covector
where
    L: DiscreteLagrangian + ?Sized,
    F: DiscreteForce + ?Sized,
{
    model.d1(q_curr, q_next) + model.d2(q_prev, q_curr) + force.f1(q_curr, q_next) + force.f2(q_prev, q_curr)
}

/// Solves the forced DEL for `q_{k+1}` given `(q_{k-1}, q_k)`.
///
/// The Newton iteration starts from the linear extrapolation `2 q_k - q_{k-1}`.
pub fn step<L, F>(model: &L, force: &F, state: &DiscreteState, settings: &SolverSettings) -> Result<ConfigurationPoint>
where
    L: DiscreteLagrangian + ?Sized,
    F: DiscreteForce + ?Sized,
{
    check_finite(&[state.q_prev, state.q_curr])?;
    let (q_prev, q_curr) = (state.q_prev, state.q_curr);
    let guess = q_curr * 2.0 - q_prev;
    let out = newton_solve(
        |x| to_dvector(raw_residual(model, force, q_prev, q_curr, ConfigurationPoint::from_slice(x.as_slice()))),
        DVector::from_vec(guess.to_array().to_vec()),
        settings,
    )?;
    Ok(ConfigurationPoint::from_slice(out.x.as_slice()))
}

/// Solves `∂L/∂q̇(q0, v0) + D1 L^d(q0, q1) + F^d_1(q0, q1) = 0` for `q1`.
///
/// The Newton iteration starts from the Euler prediction `q0 + h v0`.
pub fn initialize_from_state<L, F>(
    model: &L,
    force: &F,
    q0: ConfigurationPoint,
    v0: Velocity,
    settings: &SolverSettings,
) -> Result<ConfigurationPoint>
where
    L: DiscreteLagrangian + LegendreTransform + ?Sized,
    F: DiscreteForce + ?Sized,
{
    check_finite(&[q0])?;
    if !v0.is_finite() {
        return Err(Error::InvalidArgument("initial velocity is not finite".into()));
    }
    let p0 = model.momentum(q0, v0);
    let guess = q0.displaced(v0, model.time_step());
    let out = newton_solve(
        |x| {
            let q1 = ConfigurationPoint::from_slice(x.as_slice());
            to_dvector(p0 + model.d1(q0, q1) + force.f1(q0, q1))
        },
        DVector::from_vec(guess.to_array().to_vec()),
        settings,
    )?;
    Ok(ConfigurationPoint::from_slice(out.x.as_slice()))
}

/// Runs `n` steps of the implicit update from `(q0, q1)`.
///
/// The returned trajectory holds `n + 1` configurations. When `n == 1` no
/// update is solved and the two given points are returned as is.
pub fn simulate<L, F>(
    model: &L,
    force: &F,
    q0: ConfigurationPoint,
    q1: ConfigurationPoint,
    n: usize,
    settings: &SolverSettings,
) -> Result<Trajectory>
where
    L: DiscreteLagrangian + ?Sized,
    F: DiscreteForce + ?Sized,
{
    if n == 0 {
        return Err(Error::InvalidArgument("step count must be at least 1".into()));
    }
    check_finite(&[q0, q1])?;
    settings.validate()?;

    let mut points = Vec::with_capacity(n + 1);
    points.push(q0);
    points.push(q1);
    let mut state = DiscreteState::new(q0, q1, 1);
    while points.len() < n + 1 {
        let next = step(model, force, &state, settings).map_err(|e| e.at_step(state.k))?;
        points.push(next);
        state = state.advance(next);
    }
    Ok(Trajectory::record(model, force, points))
}

/// [`simulate`] with `q1` obtained from [`initialize_from_state`].
pub fn simulate_from_state<L, F>(
    model: &L,
    force: &F,
    q0: ConfigurationPoint,
    v0: Velocity,
    n: usize,
    settings: &SolverSettings,
) -> Result<Trajectory>
where
    L: DiscreteLagrangian + LegendreTransform + ?Sized,
    F: DiscreteForce + ?Sized,
{
    let q1 = initialize_from_state(model, force, q0, v0, settings).map_err(|e| e.at_step(0))?;
    simulate(model, force, q0, q1, n, settings)
}

/// Largest forced DEL residual over the interior nodes of a stored path.
pub fn replay_residual<L, F>(model: &L, force: &F, points: &[ConfigurationPoint]) -> f64
where
    L: DiscreteLagrangian + ?Sized,
    F: DiscreteForce + ?Sized,
{
    points
        .windows(3)
        .map(|w| raw_residual(model, force, w[0], w[1], w[2]).norm_inf())
        .fold(0.0, f64::max)
}
