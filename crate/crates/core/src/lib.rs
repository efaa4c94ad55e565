//! Desk-scale simulator for collective spin squeezing of two microwave-driven
//! spin ensembles coupled through a common damped acoustic mode.
//!
//! The simulation lives in the symmetric (Dicke) subspace of each ensemble:
//! an ensemble of `n` spin-1/2 systems is represented by the spin-`n/2`
//! multiplet of dimension `n + 1`, and the pair of ensembles by the tensor
//! product of the two multiplets. On that space the crate builds effective
//! one-axis-twisting (OAT), two-axis-two-spin (TATS) and mixed interaction
//! Hamiltonians from physical drive parameters, integrates the Lindblad
//! master equation, and evaluates the squeezing parameters ξ_S² and ξ_R².
//!
//! Modules:
//! - [`spin`] — collective operators, coherent spin states, tensor embedding;
//! - [`model`] — drive parameters → effective couplings → Hamiltonians;
//! - [`dynamics`] — density matrices, dissipators, RK4/RK45 integration;
//! - [`squeezing`] — mean spin, transverse variances, ξ_S², ξ_R², ⟨J_X²⟩;
//! - [`fullmodel`] — small-N unreduced model (four-level sites ⊗ phonon)
//!   used to validate the two-stage reduction and the dephasing treatment;
//! - [`sparse`] — minimal CSR kernels backing the integrator hot path.

pub mod dynamics;
mod error;
pub mod fullmodel;
pub mod model;
pub mod sparse;
pub mod spin;
pub mod squeezing;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// 2π, for converting ordinary frequencies to angular ones.
pub const TWO_PI: f64 = std::f64::consts::TAU;
