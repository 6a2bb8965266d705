//! Discrete controlled Lagrangians for the cart-pendulum.
//!
//! The crate is organised bottom-up:
//!
//! * [`variational`]: generic discrete mechanics on a two-dimensional
//!   configuration space: discrete Euler–Lagrange residuals, the implicit
//!   update map, velocity-based initialization and trajectory simulation.
//! * [`cart_pendulum`]: the physical model (metric coefficients, potentials,
//!   midpoint discrete Lagrangian).
//! * [`shaping`]: kinetic and potential shaping: controlled Lagrangians,
//!   control inputs, the shape-equation forcing `w_k`, dissipation terms and
//!   the closed-loop force assembly.
//! * [`stability`]: linearized update maps, quadratic discrete energies,
//!   spectral certificates and dual-simulation matching checks.
//! * [`mpc`]: the digital model-predictive controller with a zero-order-hold
//!   plant.
//! * [`scenario`]: configuration parsing, scenario execution and CSV output
//!   used by the command-line runner and the Python bindings.

pub mod cart_pendulum;
pub mod error;
pub mod mpc;
pub mod scenario;
pub mod shaping;
pub mod stability;
pub mod variational;

pub use cart_pendulum::{CartPendulum, KineticCoefficients, ModelParameters};
pub use error::{Error, Result};
pub use shaping::{ControllerGains, ShapingMode};
pub use variational::{ConfigurationPoint, Covector, DiscreteState, SolverSettings, Trajectory, Velocity};
