//! Time evolution of `U(alpha, t)` and `dU/d(alpha)`.
//!
//! [`propagate`] chains local Taylor expansions (the relay), splitting at every
//! analytic-piece boundary of the ansatz. [`reference_propagate`] is an
//! adaptive Dormand–Prince integrator used as an independent oracle, and
//! [`pwc_propagate`] is the piecewise-constant baseline.

mod hamiltonian;
mod pwc;
mod reference;
mod taylor;

use serde::{Deserialize, Serialize};

pub use hamiltonian::ControlledHamiltonian;
pub use pwc::{pwc_propagate, Sampling};
pub use reference::{reference_propagate, reference_propagate_with_stats, ReferenceStats};
pub use taylor::{propagate, propagate_from, taylor_step, taylor_step_with_gradient};

use crate::densemath::ComplexMatrix;
use crate::{GoatError, Result};

/// Largest Taylor order the relay supports.
pub const MAX_TAYLOR_ORDER: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagatorSettings {
    /// Highest Taylor order `K` kept per step.
    pub taylor_order: usize,
    /// A step is accepted when `||K-th term||_F <= step_tolerance * ||U_0||_F`.
    pub step_tolerance: f64,
    /// Upper bound on a single relay step.
    pub max_step: f64,
    /// Step growth after an accepted step.
    pub growth_factor: f64,
    /// Relative tolerance of the Dormand–Prince reference integrator.
    pub reference_tolerance: f64,
}

impl Default for PropagatorSettings {
    fn default() -> Self {
        Self {
            taylor_order: 12,
            step_tolerance: 1e-14,
            max_step: f64::INFINITY,
            growth_factor: 1.5,
            reference_tolerance: 1e-14,
        }
    }
}

impl PropagatorSettings {
    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_TAYLOR_ORDER).contains(&self.taylor_order) {
            return Err(GoatError::InvalidArgument(format!(
                "taylor_order must be in [2, {MAX_TAYLOR_ORDER}], got {}",
                self.taylor_order
            )));
        }
        if !(self.step_tolerance > 0.0) || !(self.reference_tolerance > 0.0) {
            return Err(GoatError::InvalidArgument("tolerances must be positive".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(GoatError::InvalidArgument("max_step must be positive".into()));
        }
        if !(self.growth_factor >= 1.0 && self.growth_factor.is_finite()) {
            return Err(GoatError::InvalidArgument("growth_factor must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    /// `U(T)`.
    pub propagator: ComplexMatrix,
    /// `dU(T)/d(alpha_s)` for each entry of `gradient_slots`.
    pub gradients: Vec<ComplexMatrix>,
    /// Parameter indices of `gradients` (the trainable slots, in order).
    pub gradient_slots: Vec<usize>,
    pub steps: usize,
    pub rejected_steps: usize,
    /// Expansion points at which the controls and the Hamiltonian derivative
    /// stack were evaluated. Rejected trials reuse their expansion point.
    pub hamiltonian_evaluations: usize,
    /// Dense matrix products performed (gemm calls).
    pub matrix_products: usize,
}
