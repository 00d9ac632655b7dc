//! Slot-by-slot comparison of the propagated gradient with central
//! finite differences.

use crate::optimize::OptimizationProblem;
use crate::propagation::propagate;
use crate::studies::Table;
use crate::Result;

/// Default finite-difference step.
pub const FD_STEP: f64 = 1e-6;

/// Default pass bound on the largest per-slot relative error.
pub const MAX_RELATIVE_ERROR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct SlotCheck {
    pub slot: usize,
    /// `||dU/da - FD||_F / ||FD||_F`.
    pub relative_error: f64,
    pub gradient_norm: f64,
    pub goal_gradient: f64,
    pub goal_fd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub step: f64,
    pub slots: Vec<SlotCheck>,
}

impl GradientReport {
    /// Zero when no slot is trainable.
    pub fn max_relative_error(&self) -> f64 {
        self.slots.iter().map(|s| s.relative_error).fold(0.0, f64::max)
    }

    pub fn median_relative_error(&self) -> f64 {
        let mut v: Vec<f64> = self.slots.iter().map(|s| s.relative_error).collect();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    pub fn passes(&self, bound: f64) -> bool {
        self.max_relative_error() <= bound
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["slot", "relative_error", "gradient_norm", "goal_gradient", "goal_fd"], &[]);
        for s in &self.slots {
            t.push(vec![
                s.slot.to_string(),
                crate::optimize::format_float(s.relative_error),
                crate::optimize::format_float(s.gradient_norm),
                crate::optimize::format_float(s.goal_gradient),
                crate::optimize::format_float(s.goal_fd),
            ]);
        }
        t
    }
}

/// Checks every trainable slot at `params` with step `h`.
pub fn gradient_check(problem: &OptimizationProblem, params: &[f64], h: f64) -> Result<GradientReport> {
    let ansatz = problem.ansatz.as_ref();
    let run = |p: &[f64], grad: bool| {
        propagate(&problem.hamiltonian, ansatz, p, problem.duration, &problem.propagator, grad)
    };
    let exact = run(params, true)?;
    let goal = problem.goal.evaluate(&exact.propagator, &exact.gradients)?;

    let mut slots = Vec::with_capacity(exact.gradient_slots.len());
    for (i, &slot) in exact.gradient_slots.iter().enumerate() {
        let mut plus = params.to_vec();
        plus[slot] += h;
        let mut minus = params.to_vec();
        minus[slot] -= h;
        let up = run(&plus, false)?.propagator;
        let um = run(&minus, false)?.propagator;
        let mut fd = up.clone();
        fd.axpy_real(-1.0, &um);
        let fd = fd.scale_real(0.5 / h);
        let g = &exact.gradients[i];
        let relative_error = g.distance(&fd) / fd.frobenius_norm().max(f64::MIN_POSITIVE);
        let goal_fd = (problem.goal.infidelity(&up)? - problem.goal.infidelity(&um)?) / (2.0 * h);
        slots.push(SlotCheck {
            slot,
            relative_error,
            gradient_norm: g.frobenius_norm(),
            goal_gradient: goal.gradient[i],
            goal_fd,
        });
    }
    Ok(GradientReport { step: h, slots })
}
