use std::sync::Arc;

use super::{bfgs, nelder_mead, Bounds, LineSearchSettings, Method, Objective, ObjectiveValue, OptimizationTrace, StopConditions};
use crate::controls::{check_params, ControlAnsatz};
use crate::objective::Goal;
use crate::propagation::{propagate, ControlledHamiltonian, PropagatorSettings};
use crate::{GoatError, Result};

/// Everything needed to run one optimization.
#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    pub hamiltonian: ControlledHamiltonian,
    pub ansatz: Arc<dyn ControlAnsatz>,
    pub goal: Goal,
    pub duration: f64,
    pub propagator: PropagatorSettings,
    /// Full parameter vector; frozen slots keep these values.
    pub initial: Vec<f64>,
    pub stop: StopConditions,
    pub method: Method,
    pub line_search: LineSearchSettings,
    /// Edge length of the initial Nelder–Mead simplex.
    pub simplex_step: f64,
    /// Per-slot box over the full parameter vector.
    pub bounds: Option<Bounds>,
}

impl OptimizationProblem {
    pub fn new(
        hamiltonian: ControlledHamiltonian,
        ansatz: Arc<dyn ControlAnsatz>,
        goal: Goal,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let duration = ansatz.duration();
        let problem = Self {
            hamiltonian,
            ansatz,
            goal,
            duration,
            propagator: PropagatorSettings::default(),
            initial,
            stop: StopConditions::default(),
            method: Method::Bfgs,
            line_search: LineSearchSettings::default(),
            simplex_step: 0.1,
            bounds: None,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        self.propagator.validate()?;
        self.stop.validate()?;
        self.line_search.validate()?;
        check_params(self.ansatz.as_ref(), &self.initial)?;
        if self.ansatz.n_controls() != self.hamiltonian.n_controls() {
            return Err(GoatError::DimensionMismatch {
                context: "ansatz controls vs control Hamiltonians",
                left: self.ansatz.n_controls(),
                right: self.hamiltonian.n_controls(),
            });
        }
        if self.goal.dim() != self.hamiltonian.dim() {
            return Err(GoatError::DimensionMismatch {
                context: "goal vs Hamiltonian",
                left: self.goal.dim(),
                right: self.hamiltonian.dim(),
            });
        }
        if !(self.duration > 0.0) || self.duration > self.ansatz.duration() * (1.0 + 1e-14) {
            return Err(GoatError::InvalidArgument(format!(
                "duration {} must be in (0, {}]",
                self.duration,
                self.ansatz.duration()
            )));
        }
        if let Some(b) = &self.bounds {
            if b.lower.len() != self.initial.len() {
                return Err(GoatError::DimensionMismatch {
                    context: "bounds vs parameter slots",
                    left: b.lower.len(),
                    right: self.initial.len(),
                });
            }
        }
        Ok(())
    }

    pub fn with_initial(&self, initial: Vec<f64>) -> Self {
        Self {
            initial,
            ..self.clone()
        }
    }

    pub fn objective(&self) -> ControlObjective<'_> {
        ControlObjective::new(self)
    }
}

/// The goal as a function of the trainable slots only.
pub struct ControlObjective<'a> {
    problem: &'a OptimizationProblem,
    free: Vec<usize>,
    bounds: Option<Bounds>,
}

impl<'a> ControlObjective<'a> {
    pub fn new(problem: &'a OptimizationProblem) -> Self {
        let free = problem.ansatz.trainable_slots();
        let bounds = problem.bounds.as_ref().map(|b| Bounds {
            lower: free.iter().map(|&s| b.lower[s]).collect(),
            upper: free.iter().map(|&s| b.upper[s]).collect(),
        });
        Self {
            problem,
            free,
            bounds,
        }
    }

    pub fn free_slots(&self) -> &[usize] {
        &self.free
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&s| full[s]).collect()
    }

    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.problem.initial.clone();
        for (&s, &v) in self.free.iter().zip(x) {
            full[s] = v;
        }
        full
    }

    pub fn bounds(&self) -> Option<&Bounds> {
        self.bounds.as_ref()
    }
}

impl Objective for ControlObjective<'_> {
    fn dimension(&self) -> usize {
        self.free.len()
    }

    fn evaluate(&self, x: &[f64], with_gradient: bool) -> Result<ObjectiveValue> {
        let p = self.problem;
        let full = self.expand(x);
        let r = propagate(
            &p.hamiltonian,
            p.ansatz.as_ref(),
            &full,
            p.duration,
            &p.propagator,
            with_gradient,
        )?;
        let (value, gradient) = if with_gradient {
            let e = p.goal.evaluate(&r.propagator, &r.gradients)?;
            (e.value, Some(e.gradient))
        } else {
            (p.goal.infidelity(&r.propagator)?, None)
        };
        Ok(ObjectiveValue {
            value,
            gradient,
            hamiltonian_evaluations: r.hamiltonian_evaluations,
        })
    }
}

fn run(problem: &OptimizationProblem, method: Method) -> Result<OptimizationTrace> {
    problem.validate()?;
    let objective = problem.objective();
    let x0 = objective.restrict(&problem.initial);
    let mut trace = match method {
        Method::Bfgs => bfgs(&objective, &x0, &problem.stop, &problem.line_search, objective.bounds())?,
        Method::NelderMead => nelder_mead(&objective, &x0, &problem.stop, problem.simplex_step, objective.bounds())?,
    };
    for r in &mut trace.records {
        r.params = objective.expand(&r.params);
    }
    Ok(trace)
}

/// BFGS driven by exact propagated gradients. Trace parameters are full
/// slot vectors.
pub fn goat_optimize(problem: &OptimizationProblem) -> Result<OptimizationTrace> {
    run(problem, Method::Bfgs)
}

pub fn nelder_mead_optimize(problem: &OptimizationProblem) -> Result<OptimizationTrace> {
    run(problem, Method::NelderMead)
}

/// Runs the method configured on the problem.
pub fn optimize(problem: &OptimizationProblem) -> Result<OptimizationTrace> {
    run(problem, problem.method)
}
