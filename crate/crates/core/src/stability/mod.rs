//! Linear stability certificates for the shaped closed loops.
//!
//! Spectral stability means the linearized update map has its spectrum on the
//! closed unit circle; with damping, the spectrum moves into the open disc.
//! Energies are the quadratic approximations conserved (or monotone) along the
//! linear maps. The matching checks compare closed-loop and controlled
//! trajectories directly.

mod kinetic;
mod linear;
mod matching;
mod potential;

pub use kinetic::{
    kinetic_damped_map, kinetic_recurrence, kinetic_spectral_condition, linearized_kinetic_map,
    quadratic_energy_kinetic, reduced_inertia, KineticSpectralCondition,
};
pub use linear::LinearUpdateMap;
pub use matching::{
    alternative_obstruction, alternative_reduced_mismatch, kinetic_obstruction, kinetic_reduced_mismatch,
    verify_matching_equivalence, MatchingDeviation, MatchingVariant,
};
pub use potential::{
    damped_linear_map, energy_balance_check, energy_balance_with_factor, linearized_potential_map, orbit_points,
    potential_damped_map, potential_spectral_condition, PotentialCertificate, QuadraticEnergy, QuadraticModel,
};
