use dclag_core::cart_pendulum::{CartPendulum, ModelParameters};
use dclag_core::shaping::{
    alternative_controlled_ld, kinetic_control_input, kinetic_controlled_ld, kinetic_dissipation_term,
    potential_control_input, w_term, ClosedLoopForce, ControllerGains, ShapingMode, VepsArgument,
};
use dclag_core::stability::kinetic_spectral_condition;
use dclag_core::variational::{simulate, simulate_from_state, ConfigurationPoint, DiscreteForce, SolverSettings, Velocity};

fn q(phi: f64, s: f64) -> ConfigurationPoint {
    ConfigurationPoint::new(phi, s)
}

fn level() -> (ModelParameters, CartPendulum) {
    let p = ModelParameters::default();
    (p, CartPendulum::new(p))
}

#[test]
fn alternative_lagrangian_without_shift_is_the_kinetic_one() {
    let (p, m) = level();
    let gains = ControllerGains::alternative(&p, 20.0, 0.0).unwrap();
    let (a, b) = (q(0.1, 0.2), q(0.13, 0.18));
    assert_eq!(alternative_controlled_ld(&m, &gains, a, b), kinetic_controlled_ld(&m, &gains, a, b));
}

#[test]
fn shift_term_telescopes_over_a_closed_loop() {
    // With β frozen the momentum-shift term is λτΔφ, whose sum over a loop in φ vanishes.
    let p = ModelParameters::default();
    let m = CartPendulum::with_frozen_coupling(p);
    let kinetic = ControllerGains::kinetic(&p, 20.0, 0.3).unwrap();
    let shifted = ControllerGains::alternative(&p, 20.0, 0.3).unwrap();
    let path = [q(0.0, 0.0), q(0.05, 0.01), q(0.12, 0.03), q(0.04, 0.02), q(0.0, 0.05)];
    let sum = |f: &dyn Fn(ConfigurationPoint, ConfigurationPoint) -> f64| path.windows(2).map(|w| f(w[0], w[1])).sum::<f64>();
    let with = sum(&|a, b| alternative_controlled_ld(&m, &shifted, a, b));
    let without = sum(&|a, b| kinetic_controlled_ld(&m, &kinetic, a, b));
    assert!((with - without).abs() < 1e-14, "{with} vs {without}");
}

#[test]
fn uniform_swing_gives_constant_damping_term() {
    let (h, c, d) = (0.05, 0.4, 0.07);
    let pts = [q(0.0, 0.0), q(c * h, 0.0), q(2.0 * c * h, 0.0)];
    let term = kinetic_dissipation_term(pts[0], pts[1], pts[2], d, h);
    assert!((term - d * c).abs() < 1e-15);
}

#[test]
fn potential_input_without_potentials_is_the_kinetic_input() {
    let (p, m) = level();
    let gains = ControllerGains::potential(&p, 20.0, -0.02, 0.0).unwrap();
    let (a, b, c) = (q(0.1, 0.0), q(0.12, 0.01), q(0.13, 0.03));
    let pot = potential_control_input(&m, &gains, a, b, c, VepsArgument::ShapeCoordinate).unwrap();
    let kin = kinetic_control_input(&m, gains.kappa, a, b, c);
    assert!((pot - kin).abs() < 1e-15);
}

#[test]
fn zero_gain_law_applies_no_force() {
    let (_, m) = level();
    let force = ClosedLoopForce::new(m, ControllerGains::default(), ShapingMode::Kinetic).unwrap();
    let tr = simulate_from_state(&m.discrete_lagrangian(), &force, q(0.05, 0.0), Velocity::ZERO, 20, &SolverSettings::default()).unwrap();
    assert!(tr.controls.iter().flatten().all(|&u| u == 0.0));
}

#[test]
fn potential_law_holds_the_equilibrium() {
    let (p, m) = level();
    let gains = ControllerGains::potential(&p, 20.0, -0.02, 1e-5).unwrap();
    let force = ClosedLoopForce::new(m, gains, ShapingMode::Potential).unwrap();
    let origin = q(0.0, 0.0);
    let tr = simulate(&m.discrete_lagrangian(), &force, origin, origin, 500, &SolverSettings::default()).unwrap();
    let worst = tr.points.iter().map(|x| x.phi.abs().max(x.s.abs())).fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn shape_forcing_vanishes_with_constant_coupling() {
    let p = ModelParameters::default();
    let m = CartPendulum::with_frozen_coupling(p);
    let gains = ControllerGains::potential(&p, 20.0, -0.02, 1e-5).unwrap();
    let force = ClosedLoopForce::new(m, gains, ShapingMode::Potential).unwrap();
    let settings = SolverSettings::default().with_tol(1e-13);
    let tr = simulate(&m.discrete_lagrangian(), &force, q(0.1, 0.0), q(0.101, 0.0005), 300, &settings).unwrap();
    let worst = tr
        .points
        .windows(3)
        .map(|w| w_term(&m, &gains, w[0], w[1], w[2]).unwrap().abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-9, "{worst}");
}

#[test]
fn damped_kinetic_loop_brings_the_pendulum_up() {
    let (p, m) = level();
    let kappa = 2.0 * kinetic_spectral_condition(&p).unwrap().kappa_crit;
    let gains = ControllerGains::kinetic(&p, kappa, 0.0).unwrap().with_dissipation(-0.05);
    let force = ClosedLoopForce::new(m, gains, ShapingMode::KineticDissipative).unwrap();
    let tr = simulate_from_state(&m.discrete_lagrangian(), &force, q(0.1, 0.0), Velocity::ZERO, 4000, &SolverSettings::default()).unwrap();
    assert!(tr.last().phi.abs() < 1e-6);
    // the recorded inputs are the ones the force reports
    let k = 100;
    let u = force.control_input(tr.points[k - 1], tr.points[k], tr.points[k + 1]).unwrap();
    assert_eq!(tr.controls[k], Some(u));
}
