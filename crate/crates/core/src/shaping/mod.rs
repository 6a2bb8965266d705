//! Controlled Lagrangians and the feedback laws that realize them.
//!
//! Kinetic shaping shifts the velocity by `τ(φ)φ̇` with `τ = κβ(φ)` and adds a
//! `σ` correction, which stabilizes the shape `φ` on each momentum level.
//! Potential shaping adds the `ρ` term and the symmetry-breaking potential
//! `V_ε(y)`, which also stabilizes the cart position.
//!
//! On the physical side every law is a discrete force `(0, u_k)` built by
//! [`ClosedLoopForce`].

mod closed_loop;
mod continuous;
mod gains;
mod lagrangian;

pub use closed_loop::{
    auxiliary_momentum, kinetic_control_input, kinetic_dissipation_term, potential_control_input,
    potential_dissipation_term, w_term, x_of, x_slope, y_of, ClosedLoopForce, ShapeForcing, ShapingMode,
    VepsArgument,
};
pub use continuous::ContinuousLaw;
pub use gains::{
    alternative_matching_gains, kinetic_matching_gains, ControllerGains, QuadraticPotential, ShapedPotential,
};
pub use lagrangian::{
    alternative_controlled_ld, controlled_momentum, kinetic_controlled_ld, potential_controlled_ld, tau,
    PotentialTerm, ShapedLagrangian,
};
