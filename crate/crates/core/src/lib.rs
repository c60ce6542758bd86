//! Linearly-implicit Runge-Kutta-W (LIRK-W) time integration.
//!
//! The crate is `no_std` (it needs `alloc`) and carries the numerical core:
//!
//! - [`tableau`]: coefficient containers, the two published third-order
//!   methods and structural validation.
//! - [`linop`]: linear operator parts and the approximate matrix
//!   factorization (AMF) composite `L = Σ L⁽ʳ⁾`, `I - σL̃ = Π (I - σL⁽ʳ⁾)`.
//! - [`integrators`]: one-step maps of types 1, 2 and 3 and a fixed-step
//!   driver.
//! - [`trees`]: LW-tree enumeration and order-condition evaluation.
//! - [`stability`]: transfer matrices for the split linear test problem.
//! - [`problems`]: built-in test problems.
//! - [`convergence`]: step-halving sweeps and order fits.
//!
//! File formats, CSV output and the command-line front end live in the
//! `lirkw` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod convergence;
pub mod dense;
mod error;
pub mod integrators;
pub mod linop;
pub mod problems;
pub mod stability;
pub mod tableau;
pub mod trees;

pub use error::{Error, Result};
