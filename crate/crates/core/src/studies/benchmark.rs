use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{f, StudyOutput, Table};
use crate::controls::{control_value, ControlAnsatz, FourierAnsatz, SlotKind};
use crate::densemath::pauli;
use crate::objective::{gate_infidelity, GateGoal, Goal};
use crate::optimize::{
    goat_optimize, multistart, nelder_mead_optimize, start_point, InitSettings, MultistartOptions,
    OptimizationProblem, OptimizationTrace, StartSummary, Status,
};
use crate::propagation::{reference_propagate, ControlledHamiltonian, PropagatorSettings};
use crate::{GoatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkKind {
    /// `H0 = J Z⊗Z`, controls `XI, YI, IX, IY`.
    IsingCnot,
    /// `H0 = J Z⊗Z + (delta/2)(ZI - IZ)`, controls `XI, IX`.
    NvCnotStandin,
}

/// A named two-qubit CNOT problem with a Fourier ansatz on every control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub problem: BenchmarkKind,
    pub duration: f64,
    pub terms_per_control: usize,
    /// Slot kinds left trainable; the others stay at their initial values.
    pub trainable: Vec<SlotKind>,
    pub coupling: f64,
    pub detuning: f64,
    /// Seed of the shared initial point.
    pub seed: u64,
    pub init: InitSettings,
    pub propagator: PropagatorSettings,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            problem: BenchmarkKind::IsingCnot,
            duration: 4.0,
            terms_per_control: 16,
            trainable: vec![SlotKind::Amplitude, SlotKind::Frequency, SlotKind::Phase],
            coupling: 1.0,
            detuning: 0.5,
            seed: 7,
            init: InitSettings::default(),
            propagator: PropagatorSettings {
                taylor_order: 20,
                ..Default::default()
            },
        }
    }
}

impl BenchmarkSpec {
    pub fn nv_standin() -> Self {
        Self {
            problem: BenchmarkKind::NvCnotStandin,
            duration: 6.0,
            terms_per_control: 5,
            ..Default::default()
        }
    }

    pub fn hamiltonian(&self) -> Result<ControlledHamiltonian> {
        let p = |s: &str| pauli::pauli_string(s);
        let mut drift = p("ZZ")?.scale_real(self.coupling);
        let controls = match self.problem {
            BenchmarkKind::IsingCnot => vec![p("XI")?, p("YI")?, p("IX")?, p("IY")?],
            BenchmarkKind::NvCnotStandin => {
                drift.axpy_real(0.5 * self.detuning, &p("ZI")?);
                drift.axpy_real(-0.5 * self.detuning, &p("IZ")?);
                vec![p("XI")?, p("IX")?]
            }
        };
        ControlledHamiltonian::new(drift, controls)
    }
}

/// The benchmark as an optimization problem starting from stream 0 of the
/// spec seed.
pub fn build_benchmark(spec: &BenchmarkSpec) -> Result<OptimizationProblem> {
    if spec.terms_per_control == 0 {
        return Err(GoatError::InvalidArgument("terms_per_control must be positive".into()));
    }
    let ham = spec.hamiltonian()?;
    let ansatz = FourierAnsatz::new(spec.duration, vec![spec.terms_per_control; ham.n_controls()])?
        .with_trainable_kinds(&spec.trainable);
    let n = ansatz.n_slots();
    let mut problem = OptimizationProblem::new(ham, Arc::new(ansatz), Goal::Gate(GateGoal::cnot()), vec![0.0; n])?;
    problem.propagator = spec.propagator.clone();
    let mut options = MultistartOptions::new(1, spec.seed);
    options.init = spec.init.clone();
    problem.initial = start_point(&problem, &options, 0);
    Ok(problem)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoatVsNmSpec {
    pub benchmark: BenchmarkSpec,
    pub threshold: f64,
    pub goat_max_iterations: usize,
    /// Fixed simplex-iteration budget, so both traces are reproducible.
    pub nm_max_iterations: usize,
    pub simplex_step: f64,
    /// Goal levels whose times-to-reach are tabulated.
    pub levels: Vec<f64>,
}

impl Default for GoatVsNmSpec {
    fn default() -> Self {
        Self {
            benchmark: BenchmarkSpec::default(),
            threshold: 1e-10,
            goat_max_iterations: 1000,
            nm_max_iterations: 8000,
            simplex_step: 0.1,
            levels: vec![1e-2, 1e-4, 1e-6, 1e-8, 1e-10],
        }
    }
}

#[derive(Debug, Clone)]
pub struct GoatVsNmResult {
    pub goat: OptimizationTrace,
    pub nelder_mead: OptimizationTrace,
    pub table: Table,
}

impl GoatVsNmResult {
    /// Wall-clock GOAT needed to reach its threshold (its whole run).
    pub fn goat_seconds(&self) -> f64 {
        self.goat.seconds()
    }

    /// Best Nelder–Mead value within `seconds` of wall-clock.
    pub fn nm_best_within(&self, seconds: f64) -> f64 {
        self.nelder_mead
            .records
            .iter()
            .filter(|r| r.seconds <= seconds)
            .map(|r| r.value)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn output(&self, spec: &GoatVsNmSpec) -> StudyOutput {
        let t = self.goat_seconds();
        StudyOutput {
            name: "goat_vs_nm",
            table: self.table.clone(),
            tables: Vec::new(),
            traces: vec![
                ("goat".into(), self.goat.clone()),
                ("nelder_mead".into(), self.nelder_mead.clone()),
            ],
            summary: serde_json::json!({
                "spec": spec,
                "goat_status": self.goat.status.as_str(),
                "goat_final_g": self.goat.final_value(),
                "goat_iterations": self.goat.iterations(),
                "nelder_mead_status": self.nelder_mead.status.as_str(),
                "nelder_mead_final_g": self.nelder_mead.final_value(),
                "nelder_mead_iterations": self.nelder_mead.iterations(),
                "goat_seconds": t,
                "nelder_mead_seconds": self.nelder_mead.seconds(),
                "nelder_mead_best_within_10x_goat": self.nm_best_within(10.0 * t),
            }),
        }
    }
}

pub fn run_goat_vs_nm(spec: &GoatVsNmSpec) -> Result<GoatVsNmResult> {
    let mut problem = build_benchmark(&spec.benchmark)?;
    problem.stop.threshold = spec.threshold;
    problem.simplex_step = spec.simplex_step;

    problem.stop.max_iterations = spec.goat_max_iterations;
    let goat = goat_optimize(&problem)?;
    problem.stop.max_iterations = spec.nm_max_iterations;
    let nelder_mead = nelder_mead_optimize(&problem)?;

    let mut table = Table::new(
        &["level", "goat_seconds", "goat_iteration", "nelder_mead_seconds", "nelder_mead_iteration"],
        &["goat_seconds", "nelder_mead_seconds"],
    );
    let reach = |t: &OptimizationTrace, level: f64| {
        t.records
            .iter()
            .find(|r| r.value <= level)
            .map_or((String::new(), String::new()), |r| (format!("{:.6}", r.seconds), r.iteration.to_string()))
    };
    for &level in &spec.levels {
        let (gs, gi) = reach(&goat, level);
        let (ns, ni) = reach(&nelder_mead, level);
        table.push(vec![f(level), gs, gi, ns, ni]);
    }
    Ok(GoatVsNmResult {
        goat,
        nelder_mead,
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HighAccuracySpec {
    pub benchmark: BenchmarkSpec,
    pub threshold: f64,
    pub max_iterations: usize,
    /// Multistart budget; stops after the first batch with a success.
    pub starts: usize,
    pub batch: usize,
    pub reference_tolerance: f64,
    /// Grid points for the emitted pulses.
    pub pulse_samples: usize,
}

impl Default for HighAccuracySpec {
    fn default() -> Self {
        Self {
            benchmark: BenchmarkSpec::nv_standin(),
            threshold: 1e-12,
            max_iterations: 2000,
            starts: 20,
            batch: 1,
            reference_tolerance: 1e-14,
            pulse_samples: 1001,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HighAccuracyResult {
    pub best_index: usize,
    pub trace: OptimizationTrace,
    pub starts: Vec<StartSummary>,
    /// Goal recomputed with the adaptive reference integrator.
    pub g_reference: f64,
    pub pulses: Table,
    pub problem: OptimizationProblem,
}

impl HighAccuracyResult {
    pub fn converged(&self) -> bool {
        self.trace.status == Status::Converged
    }

    pub fn output(&self, spec: &HighAccuracySpec) -> StudyOutput {
        let mut starts = Table::new(&["start", "status", "final_g", "iterations", "seconds"], &["seconds"]);
        for s in &self.starts {
            starts.push(vec![
                s.index.to_string(),
                s.status.map_or("error".into(), |st| st.as_str().into()),
                f(s.final_value),
                s.iterations.to_string(),
                format!("{:.6}", s.seconds),
            ]);
        }
        StudyOutput {
            name: "cnot_hi",
            table: self.pulses.clone(),
            tables: vec![("cnot_hi_starts".into(), starts)],
            traces: vec![("best".into(), self.trace.clone())],
            summary: serde_json::json!({
                "spec": spec,
                "status": self.trace.status.as_str(),
                "best_start": self.best_index,
                "final_g": self.trace.final_value(),
                "g_reference": self.g_reference,
                "final_params": self.trace.final_params(),
            }),
        }
    }
}

pub fn run_high_accuracy_cnot(spec: &HighAccuracySpec) -> Result<HighAccuracyResult> {
    let mut problem = build_benchmark(&spec.benchmark)?;
    problem.stop.threshold = spec.threshold;
    problem.stop.max_iterations = spec.max_iterations;
    let mut options = MultistartOptions::new(spec.starts, spec.benchmark.seed);
    options.init = spec.benchmark.init.clone();
    options.batch = spec.batch;
    options.stop_on_success = true;
    let ms = multistart(&problem, &options)?;

    let params = ms.best.final_params().to_vec();
    let u = reference_propagate(
        &problem.hamiltonian,
        problem.ansatz.as_ref(),
        &params,
        problem.duration,
        spec.reference_tolerance,
    )?;
    let g_reference = match &problem.goal {
        Goal::Gate(g) => gate_infidelity(&u, g)?,
        other => other.infidelity(&u)?,
    };
    let pulses = sample_pulses(problem.ansatz.as_ref(), &params, spec.pulse_samples.max(2))?;
    Ok(HighAccuracyResult {
        best_index: ms.best_index,
        trace: ms.best,
        starts: ms.summaries,
        g_reference,
        pulses,
        problem,
    })
}

/// `t, c_0(t), c_1(t), ...` on a uniform grid over `[0, T]`.
pub fn sample_pulses(ansatz: &dyn ControlAnsatz, params: &[f64], samples: usize) -> Result<Table> {
    let names: Vec<String> = std::iter::once("t".to_string())
        .chain((0..ansatz.n_controls()).map(|k| format!("control_{k}")))
        .collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut table = Table::new(&header, &[]);
    let duration = ansatz.duration();
    for i in 0..samples {
        let t = duration * i as f64 / (samples - 1) as f64;
        let mut row = vec![f(t)];
        for k in 0..ansatz.n_controls() {
            row.push(f(control_value(ansatz, params, k, t)?));
        }
        table.push(row);
    }
    Ok(table)
}

