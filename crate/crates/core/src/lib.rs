//! Reaction-diffusion lattice gases on the one-dimensional torus.
//!
//! The crate follows a lattice gas with speeded-up stirring and local
//! creation/annihilation from the microscopic level to its macroscopic
//! large deviations:
//!
//! * [`model`]: configurations, cylinder jump rates, an exact event-driven
//!   simulator and empirical measures under the weak-topology metric.
//! * [`reaction`]: the birth and death polynomials `B`, `D`, the reaction
//!   term `F = B - D`, its potential and well structure.
//! * [`pde`]: the hydrodynamic reaction-diffusion equation, the comparison
//!   ODE and the heat semigroup.
//! * [`elliptic`]: stationary profiles, time maps, linearized spectra and
//!   heteroclinic connections.
//! * [`ldp`]: the dynamical rate functional evaluated on discretized paths.
//! * [`quasipotential`]: upper bounds and minimum-action estimates of the
//!   cost to reach a profile from a stationary family.
//! * [`fwgraph`]: arborescence weights, the static rate function and the
//!   Markov chain tree theorem.
//! * [`driver`]: experiment configuration and orchestration.

// Negated comparisons double as NaN rejection in argument checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod driver;
pub mod elliptic;
mod error;
pub mod fourier;
pub mod fwgraph;
pub mod ldp;
pub mod linalg;
pub mod model;
pub mod pde;
pub mod poly;
pub mod quasipotential;
pub mod reaction;

pub use error::{Error, Result};
