//! Wasserstein distributionally robust bounds for Lipschitz-type losses.
//!
//! The crate computes, for an empirical distribution `P_N`, a loss `psi^r` and a
//! transport budget `delta`, the closed-form upper bound
//!
//! ```text
//! U = ( E_{P_N}[psi^r]^{1/r} + L * delta )^r
//! ```
//!
//! together with the objects needed to check it: weak-Lipschitz certificates,
//! explicit worst-case distributions, a budgeted linear program over a finite
//! support grid, exact discrete Wasserstein distances and a subgradient solver
//! for the regularized training objective.
//!
//! Everything here is `no_std` with `alloc`. File formats, data generation and
//! the command line live in the companion `wdro-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod costs;
pub mod equivalence;
mod error;
pub mod linalg;
pub mod losses;
mod math;
pub mod oracle;
pub mod solver;
pub mod space;

pub use error::{Error, Result};
