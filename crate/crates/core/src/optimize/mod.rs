//! Search over the trainable parameters: BFGS with a strong-Wolfe line
//! search driven by exact gradients, and a derivative-free Nelder–Mead
//! baseline. Both write the same trace schema.

mod bfgs;
mod multistart;
mod nelder_mead;
mod problem;
mod trace;

use serde::{Deserialize, Serialize};

pub use bfgs::{bfgs, LineSearchSettings};
pub use multistart::{multistart, random_initial, start_point, InitSettings, MultistartOptions, MultistartResult, StartSummary};
pub use nelder_mead::nelder_mead;
pub use problem::{goat_optimize, nelder_mead_optimize, optimize, ControlObjective, OptimizationProblem};
pub use trace::{format_float, LineSearchInfo, OptimizationTrace, Status, TraceRecord};

use crate::{GoatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Bfgs,
    NelderMead,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Bfgs => "bfgs",
            Method::NelderMead => "nelder-mead",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopConditions {
    /// Stop as soon as the goal is at or below this value.
    pub threshold: f64,
    pub max_iterations: usize,
    /// Wall-clock cap in seconds.
    pub max_seconds: Option<f64>,
}

impl Default for StopConditions {
    fn default() -> Self {
        Self {
            threshold: 1e-10,
            max_iterations: 1000,
            max_seconds: None,
        }
    }
}

impl StopConditions {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(GoatError::InvalidArgument(format!(
                "threshold must be in (0, 1), got {}",
                self.threshold
            )));
        }
        if let Some(s) = self.max_seconds {
            if !(s > 0.0) {
                return Err(GoatError::InvalidArgument("max_seconds must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    /// Present when requested.
    pub gradient: Option<Vec<f64>>,
    /// Hamiltonian evaluations spent on this call.
    pub hamiltonian_evaluations: usize,
}

/// A scalar function of the free parameters.
pub trait Objective: Sync {
    fn dimension(&self) -> usize;

    fn evaluate(&self, x: &[f64], with_gradient: bool) -> Result<ObjectiveValue>;
}

/// Box constraints on the free parameters, enforced by projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(GoatError::DimensionMismatch {
                context: "bounds",
                left: lower.len(),
                right: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(GoatError::InvalidArgument("each lower bound must not exceed its upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((v, l), u)| l <= v && v <= u)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Checks `x0` against the objective and projects a copy into the bounds.
pub(crate) fn prepare_start(
    objective: &dyn Objective,
    x0: &[f64],
    bounds: Option<&Bounds>,
) -> Result<Vec<f64>> {
    if x0.len() != objective.dimension() {
        return Err(GoatError::DimensionMismatch {
            context: "initial point",
            left: x0.len(),
            right: objective.dimension(),
        });
    }
    if let Some(b) = bounds {
        if b.lower.len() != x0.len() {
            return Err(GoatError::DimensionMismatch {
                context: "bounds vs free parameters",
                left: b.lower.len(),
                right: x0.len(),
            });
        }
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(GoatError::NonFinite("initial point"));
    }
    let mut x = x0.to_vec();
    if let Some(b) = bounds {
        b.project(&mut x);
    }
    Ok(x)
}

/// Counts calls, keeps time and collects records for one optimizer run.
pub(crate) struct Tracker<'a> {
    objective: &'a dyn Objective,
    pub(crate) bounds: Option<&'a Bounds>,
    start: std::time::Instant,
    max_seconds: Option<f64>,
    calls: usize,
    evaluations: usize,
    pub(crate) records: Vec<TraceRecord>,
}

impl<'a> Tracker<'a> {
    pub(crate) fn new(objective: &'a dyn Objective, bounds: Option<&'a Bounds>, stop: &StopConditions) -> Self {
        Self {
            objective,
            bounds,
            start: std::time::Instant::now(),
            max_seconds: stop.max_seconds,
            calls: 0,
            evaluations: 0,
            records: Vec::new(),
        }
    }

    /// Evaluates at the projection of `x` (updated in place).
    pub(crate) fn evaluate(&mut self, x: &mut [f64], with_gradient: bool) -> Result<ObjectiveValue> {
        if let Some(b) = self.bounds {
            b.project(x);
        }
        let v = self.objective.evaluate(x, with_gradient)?;
        self.calls += 1;
        self.evaluations += v.hamiltonian_evaluations;
        if !v.value.is_finite() {
            return Err(GoatError::NonFinite("objective value"));
        }
        Ok(v)
    }

    pub(crate) fn record(
        &mut self,
        iteration: usize,
        x: &[f64],
        value: f64,
        gradient_norm: f64,
        line_search: Option<LineSearchInfo>,
    ) {
        self.records.push(TraceRecord {
            iteration,
            params: x.to_vec(),
            value,
            gradient_norm,
            hamiltonian_evaluations: self.evaluations,
            objective_calls: self.calls,
            seconds: self.start.elapsed().as_secs_f64(),
            line_search,
        });
    }

    pub(crate) fn timed_out(&self) -> bool {
        self.max_seconds
            .is_some_and(|cap| self.start.elapsed().as_secs_f64() >= cap)
    }

    pub(crate) fn finish(self, method: Method, status: Status) -> OptimizationTrace {
        OptimizationTrace {
            method,
            records: self.records,
            status,
        }
    }
}
