//! Quantum optimal control with analytic pulses.
//!
//! The propagator `U(t)` of a controlled Hamiltonian and its gradient with
//! respect to every pulse parameter are evolved together by chaining local
//! Taylor expansions. Exact goal gradients then drive a quasi-Newton search.
//!
//! Units: `hbar = 1`; all times and frequencies are dimensionless.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod controls;
pub mod densemath;
pub mod error;
pub mod gradcheck;
pub mod objective;
pub mod optimize;
pub mod propagation;
pub mod studies;

pub use error::{GoatError, Result};

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
