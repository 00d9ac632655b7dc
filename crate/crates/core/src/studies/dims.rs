use std::sync::Arc;

use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{f, StudyOutput, Table};
use crate::controls::{ControlAnsatz, FourierAnsatz, PwcAnsatz, SlotKind};
use crate::densemath::{random_hermitian_with, random_state_with, random_unitary_with, Rng};
use crate::objective::{GateGoal, Goal, StateGoal};
use crate::optimize::{goat_optimize, OptimizationProblem, Status};
use crate::propagation::ControlledHamiltonian;
use crate::{GoatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    StateTransfer,
    Gate,
}

impl Task {
    /// Control dimension at which success is expected: `2d - 2` or `d^2`.
    pub fn threshold_dim(&self, d: usize) -> usize {
        match self {
            Task::StateTransfer => 2 * d - 2,
            Task::Gate => d * d,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Task::StateTransfer => "state-transfer",
            Task::Gate => "gate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parametrization {
    /// Trainable amplitudes over fixed random frequencies and phases.
    FourierAmplitudes,
    Pwc,
    /// Slice values and slice widths.
    PwcFlexible,
}

impl Parametrization {
    fn name(&self) -> &'static str {
        match self {
            Parametrization::FourierAmplitudes => "fourier-amplitudes",
            Parametrization::Pwc => "pwc",
            Parametrization::PwcFlexible => "pwc-flexible",
        }
    }
}

/// Success rate of single random-start optimizations against the number of
/// trainable control parameters. Each trial draws a fresh random drift, a
/// single random control Hamiltonian and a random goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimStudySpec {
    pub task: Task,
    pub hilbert_dims: Vec<usize>,
    /// Absolute control dimensions. When empty, `threshold_offsets` are used.
    pub control_dims: Vec<usize>,
    /// Control dimensions relative to the task threshold (`2d - 2` or `d^2`).
    pub threshold_offsets: Vec<i64>,
    pub trials: usize,
    pub parametrization: Parametrization,
    pub threshold: f64,
    pub max_iterations: usize,
    /// Random starts per trial; a trial stops at its first success.
    pub starts_per_trial: usize,
    pub duration: f64,
    pub seed: u64,
    /// Scale of the random drift relative to a unit-variance GUE draw.
    pub drift_scale: f64,
    /// Log-uniform band for the fixed Fourier frequencies.
    pub frequency_band: (f64, f64),
    /// Initial amplitudes or slice values are uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for DimStudySpec {
    fn default() -> Self {
        Self {
            task: Task::StateTransfer,
            hilbert_dims: vec![2, 3],
            control_dims: Vec::new(),
            threshold_offsets: vec![-1, 0],
            trials: 20,
            parametrization: Parametrization::FourierAmplitudes,
            threshold: 1e-10,
            max_iterations: 500,
            starts_per_trial: 8,
            duration: 6.0,
            seed: 1,
            drift_scale: 1.0,
            frequency_band: (0.5, 5.0),
            init_scale: 1.0,
        }
    }
}

impl DimStudySpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GoatError::InvalidArgument(m.to_string()));
        if self.trials == 0 || self.starts_per_trial == 0 {
            return bad("trials and starts_per_trial must be at least 1");
        }
        if self.hilbert_dims.is_empty() || self.hilbert_dims.iter().any(|&d| !(2..=16).contains(&d)) {
            return bad("hilbert dims must be in 2..=16");
        }
        if self.control_dims.is_empty() && self.threshold_offsets.is_empty() {
            return bad("give control_dims or threshold_offsets");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) || !(self.duration > 0.0) {
            return bad("threshold must be in (0, 1) and duration positive");
        }
        let (lo, hi) = self.frequency_band;
        if !(lo > 0.0 && lo <= hi) {
            return bad("frequency band must be positive and ordered");
        }
        Ok(())
    }

    /// `(hilbert dim, control dim)` cells in canonical order.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for &d in &self.hilbert_dims {
            let mut dims: Vec<usize> = if self.control_dims.is_empty() {
                let base = self.task.threshold_dim(d) as i64;
                self.threshold_offsets
                    .iter()
                    .map(|o| base + o)
                    .filter(|m| *m >= 1)
                    .map(|m| m as usize)
                    .collect()
            } else {
                self.control_dims.clone()
            };
            dims.sort_unstable();
            dims.dedup();
            cells.extend(dims.into_iter().map(|m| (d, m)));
        }
        cells
    }

    fn rng(&self, salt: u64, stream: u64) -> Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ salt);
        rng.set_stream(stream);
        rng
    }

    /// Random system and goal of trial `trial` at Hilbert dimension `d`;
    /// shared by every control dimension.
    fn system(&self, d: usize, trial: usize) -> Result<(ControlledHamiltonian, Goal)> {
        let mut rng = self.rng(0, ((d as u64) << 32) | trial as u64);
        let drift = random_hermitian_with(d, &mut rng).scale_real(self.drift_scale);
        let control = random_hermitian_with(d, &mut rng);
        let goal = match self.task {
            Task::StateTransfer => {
                let initial = random_state_with(d, &mut rng);
                Goal::State(StateGoal::new(initial, random_state_with(d, &mut rng))?)
            }
            Task::Gate => Goal::Gate(GateGoal::new(random_unitary_with(d, &mut rng))?),
        };
        Ok((ControlledHamiltonian::new(drift, vec![control])?, goal))
    }

    /// Ansatz with exactly `m` effective trainable parameters and the
    /// initial point of start `start`. Fixed Fourier frequencies and phases
    /// depend on the trial only.
    fn ansatz(&self, d: usize, m: usize, trial: usize, start: usize) -> Result<(Arc<dyn ControlAnsatz>, Vec<f64>)> {
        let mut fixed = self.rng(0x5eed, ((d as u64) << 40) | ((m as u64) << 20) | trial as u64);
        let mut init = self.rng(
            0x1417,
            ((d as u64) << 48) | ((m as u64) << 32) | ((start as u64) << 20) | trial as u64,
        );
        let s = self.init_scale;
        let mut value = move || s * (2.0 * init.random::<f64>() - 1.0);
        Ok(match self.parametrization {
            Parametrization::FourierAmplitudes => {
                let ans = FourierAnsatz::new(self.duration, vec![m])?.with_trainable_kinds(&[SlotKind::Amplitude]);
                let (lo, hi) = self.frequency_band;
                let mut p = Vec::with_capacity(3 * m);
                for _ in 0..m {
                    let w = (lo.ln() + (hi.ln() - lo.ln()) * fixed.random::<f64>()).exp();
                    let phi = std::f64::consts::TAU * fixed.random::<f64>();
                    p.extend([value(), w, phi]);
                }
                (Arc::new(ans), p)
            }
            Parametrization::Pwc => {
                let ans = PwcAnsatz::uniform(self.duration, m, 1)?;
                let p = (0..m).map(|_| value()).collect();
                (Arc::new(ans), p)
            }
            Parametrization::PwcFlexible => {
                // S values plus m - S free width logits; the remaining logits
                // are frozen at zero, which also removes the softmax shift
                // redundancy.
                let slices = m / 2 + 1;
                let free_logits = m - slices;
                let mut ans = PwcAnsatz::flexible(self.duration, slices, 1)?;
                let mut p = Vec::with_capacity(2 * slices);
                for n in 0..slices {
                    p.push(value());
                    p.push(0.0);
                    if n >= free_logits {
                        ans.set_trainable(2 * n + 1, false);
                    }
                }
                (Arc::new(ans), p)
            }
        })
    }

    fn run_trial(&self, d: usize, m: usize, trial: usize) -> Result<TrialOutcome> {
        let (ham, goal) = self.system(d, trial)?;
        let mut outcome = TrialOutcome {
            hilbert_dim: d,
            control_dim: m,
            trial,
            status: None,
            final_value: f64::NAN,
            starts: 0,
            iterations: 0,
            seconds: 0.0,
        };
        for start in 0..self.starts_per_trial {
            let (ansatz, initial) = self.ansatz(d, m, trial, start)?;
            let mut problem = OptimizationProblem::new(ham.clone(), ansatz, goal.clone(), initial)?;
            problem.stop.threshold = self.threshold;
            problem.stop.max_iterations = self.max_iterations;
            outcome.starts += 1;
            // Numerical failures of a start are data, not study errors.
            let Ok(t) = goat_optimize(&problem) else { continue };
            outcome.iterations += t.iterations();
            outcome.seconds += t.seconds();
            if !(t.final_value() >= outcome.final_value) {
                outcome.final_value = t.final_value();
                outcome.status = Some(t.status);
            }
            if t.status == Status::Converged {
                break;
            }
        }
        Ok(outcome)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub hilbert_dim: usize,
    pub control_dim: usize,
    pub trial: usize,
    pub status: Option<Status>,
    /// Best final goal over the starts used.
    pub final_value: f64,
    pub starts: usize,
    /// Summed over starts.
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimCell {
    pub hilbert_dim: usize,
    pub control_dim: usize,
    pub successes: usize,
    pub trials: usize,
}

impl DimCell {
    pub fn success_fraction(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone)]
pub struct DimStudyResult {
    pub cells: Vec<DimCell>,
    pub trials: Vec<TrialOutcome>,
    pub table: Table,
    pub trial_table: Table,
}

impl DimStudyResult {
    pub fn cell(&self, hilbert_dim: usize, control_dim: usize) -> Option<&DimCell> {
        self.cells
            .iter()
            .find(|c| c.hilbert_dim == hilbert_dim && c.control_dim == control_dim)
    }

    pub fn output(&self, spec: &DimStudySpec) -> StudyOutput {
        StudyOutput {
            name: "dims",
            table: self.table.clone(),
            tables: vec![("dims_trials".into(), self.trial_table.clone())],
            traces: Vec::new(),
            summary: serde_json::json!({
                "spec": spec,
                "cells": self.cells.iter().map(|c| serde_json::json!({
                    "hilbert_dim": c.hilbert_dim,
                    "control_dim": c.control_dim,
                    "successes": c.successes,
                    "trials": c.trials,
                })).collect::<Vec<_>>(),
            }),
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn run_dim_study(spec: &DimStudySpec) -> Result<DimStudyResult> {
    spec.validate()?;
    let cells = spec.cells();
    let jobs: Vec<(usize, usize, usize)> = cells
        .iter()
        .flat_map(|&(d, m)| (0..spec.trials).map(move |j| (d, m, j)))
        .collect();
    let outcomes: Vec<Result<TrialOutcome>> = jobs
        .par_iter()
        .map(|&(d, m, j)| spec.run_trial(d, m, j))
        .collect();
    let trials: Vec<TrialOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let mut table = Table::new(
        &["task", "hilbert_dim", "control_dim", "parametrization", "successes", "trials", "success_fraction", "median_iterations", "median_seconds"],
        &["median_seconds"],
    );
    let mut trial_table = Table::new(
        &["hilbert_dim", "control_dim", "trial", "status", "final_g", "starts", "iterations", "seconds"],
        &["seconds"],
    );
    let mut summary = Vec::new();
    for &(d, m) in &cells {
        let cell: Vec<&TrialOutcome> = trials
            .iter()
            .filter(|t| t.hilbert_dim == d && t.control_dim == m)
            .collect();
        let successes = cell.iter().filter(|t| t.status == Some(Status::Converged)).count();
        table.push(vec![
            spec.task.name().into(),
            d.to_string(),
            m.to_string(),
            spec.parametrization.name().into(),
            successes.to_string(),
            cell.len().to_string(),
            f(successes as f64 / cell.len() as f64),
            f(median(cell.iter().map(|t| t.iterations as f64).collect())),
            format!("{:.6}", median(cell.iter().map(|t| t.seconds).collect())),
        ]);
        for t in &cell {
            trial_table.push(vec![
                d.to_string(),
                m.to_string(),
                t.trial.to_string(),
                t.status.map_or("error".into(), |s| s.as_str().into()),
                f(t.final_value),
                t.starts.to_string(),
                t.iterations.to_string(),
                format!("{:.6}", t.seconds),
            ]);
        }
        summary.push(DimCell {
            hilbert_dim: d,
            control_dim: m,
            successes,
            trials: cell.len(),
        });
    }
    Ok(DimStudyResult {
        cells: summary,
        trials,
        table,
        trial_table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_follow_thresholds() {
        let spec = DimStudySpec {
            task: Task::Gate,
            hilbert_dims: vec![2, 3],
            threshold_offsets: vec![0, -1],
            ..Default::default()
        };
        assert_eq!(spec.cells(), vec![(2, 3), (2, 4), (3, 8), (3, 9)]);
        let spec = DimStudySpec {
            control_dims: vec![3, 1],
            hilbert_dims: vec![2],
            ..Default::default()
        };
        assert_eq!(spec.cells(), vec![(2, 1), (2, 3)]);
    }

    #[test]
    fn ansatz_has_requested_dimension() {
        for parametrization in [Parametrization::FourierAmplitudes, Parametrization::Pwc, Parametrization::PwcFlexible] {
            let spec = DimStudySpec {
                parametrization,
                ..Default::default()
            };
            for m in 1..8 {
                let (ans, p) = spec.ansatz(2, m, 0, 0).unwrap();
                assert_eq!(ans.trainable_slots().len(), m, "{parametrization:?} {m}");
                assert_eq!(p.len(), ans.n_slots());
            }
        }
    }

    #[test]
    fn system_is_shared_across_control_dims() {
        let spec = DimStudySpec::default();
        let (h1, g1) = spec.system(2, 3).unwrap();
        let (h2, g2) = spec.system(2, 3).unwrap();
        assert_eq!(h1.drift(), h2.drift());
        assert_eq!(g1, g2);
        let (h3, _) = spec.system(2, 4).unwrap();
        assert_ne!(h1.drift(), h3.drift());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(vec![]).is_nan());
    }
}
