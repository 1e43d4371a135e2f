//! Simulation core for superconducting-circuit Maxwell's demon protocols.
//!
//! Natural units throughout (`ħ = k_B = 1`); energies are multiples of the
//! qubit frequency unless a function says otherwise, and information is in
//! nats. Composite spaces are ordered `[qubit, cavity]`.

pub mod demons;
pub mod dynamics;
pub mod error;
pub mod parallel;
pub mod quantum;
pub mod thermo;

pub use error::{Error, Result};
