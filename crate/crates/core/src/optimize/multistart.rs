use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{optimize, OptimizationProblem, OptimizationTrace, Status};
use crate::controls::{ControlAnsatz, SlotKind};
use crate::{GoatError, Result};

/// Ranges for random initial points. Frequencies are log-uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSettings {
    pub amplitude: (f64, f64),
    pub frequency: (f64, f64),
    pub phase: (f64, f64),
    pub value: (f64, f64),
    pub width_logit: (f64, f64),
}

impl Default for InitSettings {
    fn default() -> Self {
        Self {
            amplitude: (-1.0, 1.0),
            frequency: (0.5, 5.0),
            phase: (0.0, std::f64::consts::TAU),
            value: (-1.0, 1.0),
            width_logit: (-0.5, 0.5),
        }
    }
}

impl InitSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("amplitude", self.amplitude),
            ("frequency", self.frequency),
            ("phase", self.phase),
            ("value", self.value),
            ("width_logit", self.width_logit),
        ] {
            if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                return Err(GoatError::InvalidArgument(format!("{name} range [{lo}, {hi}] is empty")));
            }
        }
        if !(self.frequency.0 > 0.0) {
            return Err(GoatError::InvalidArgument("frequency band must be positive for log-uniform draws".into()));
        }
        Ok(())
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Copy of `base` with every trainable slot redrawn.
pub fn random_initial<R: Rng>(ansatz: &dyn ControlAnsatz, base: &[f64], init: &InitSettings, rng: &mut R) -> Vec<f64> {
    let mut out = base.to_vec();
    for (slot, d) in ansatz.layout().iter().enumerate() {
        if !d.trainable {
            continue;
        }
        out[slot] = match d.kind {
            SlotKind::Amplitude => uniform(rng, init.amplitude),
            SlotKind::Frequency => {
                let (lo, hi) = init.frequency;
                uniform(rng, (lo.ln(), hi.ln())).exp()
            }
            SlotKind::Phase => uniform(rng, init.phase),
            SlotKind::Value => uniform(rng, init.value),
            SlotKind::WidthLogit => uniform(rng, init.width_logit),
        };
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultistartOptions {
    pub starts: usize,
    pub seed: u64,
    /// Stop after the first batch containing a success.
    pub stop_on_success: bool,
    /// Starts run concurrently per batch; fixed so results do not depend on
    /// the thread count.
    pub batch: usize,
    pub init: InitSettings,
}

impl MultistartOptions {
    pub fn new(starts: usize, seed: u64) -> Self {
        Self {
            starts,
            seed,
            stop_on_success: false,
            batch: 4,
            init: InitSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub index: usize,
    pub status: Option<Status>,
    pub final_value: f64,
    pub iterations: usize,
    pub hamiltonian_evaluations: usize,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct MultistartResult {
    pub best_index: usize,
    pub best: OptimizationTrace,
    pub summaries: Vec<StartSummary>,
    pub successes: usize,
}

impl MultistartResult {
    pub fn success_fraction(&self) -> f64 {
        self.successes as f64 / self.summaries.len() as f64
    }
}

/// Initial point of start `index`: stream `index` of a ChaCha8 generator
/// seeded with `seed`.
pub fn start_point(problem: &OptimizationProblem, options: &MultistartOptions, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    rng.set_stream(index as u64);
    random_initial(problem.ansatz.as_ref(), &problem.initial, &options.init, &mut rng)
}

/// Independent optimizations from seeded random starts. Start 0 is not
/// special: every start is drawn.
pub fn multistart(problem: &OptimizationProblem, options: &MultistartOptions) -> Result<MultistartResult> {
    if options.starts == 0 || options.batch == 0 {
        return Err(GoatError::InvalidArgument("multistart needs at least one start and a positive batch".into()));
    }
    options.init.validate()?;
    problem.validate()?;

    let mut outcomes: Vec<(usize, Result<OptimizationTrace>)> = Vec::new();
    let mut next = 0;
    while next < options.starts {
        let end = (next + options.batch).min(options.starts);
        let batch: Vec<(usize, Result<OptimizationTrace>)> = (next..end)
            .into_par_iter()
            .map(|i| (i, optimize(&problem.with_initial(start_point(problem, options, i)))))
            .collect();
        let hit = batch
            .iter()
            .any(|(_, r)| r.as_ref().is_ok_and(|t| t.status == Status::Converged));
        outcomes.extend(batch);
        next = end;
        if hit && options.stop_on_success {
            break;
        }
    }

    let summaries: Vec<StartSummary> = outcomes
        .iter()
        .map(|(i, r)| match r {
            Ok(t) => StartSummary {
                index: *i,
                status: Some(t.status),
                final_value: t.final_value(),
                iterations: t.iterations(),
                hamiltonian_evaluations: t.last().hamiltonian_evaluations,
                seconds: t.seconds(),
                error: None,
            },
            Err(e) => StartSummary {
                index: *i,
                status: None,
                final_value: f64::NAN,
                iterations: 0,
                hamiltonian_evaluations: 0,
                seconds: 0.0,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let successes = summaries
        .iter()
        .filter(|s| s.status == Some(Status::Converged))
        .count();

    let mut best: Option<(usize, OptimizationTrace)> = None;
    let mut first_error = None;
    for (i, r) in outcomes {
        match r {
            Ok(t) => {
                if best.as_ref().is_none_or(|(_, b)| t.final_value() < b.final_value()) {
                    best = Some((i, t));
                }
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    match best {
        Some((best_index, best)) => Ok(MultistartResult {
            best_index,
            best,
            summaries,
            successes,
        }),
        None => Err(first_error.expect("at least one start ran")),
    }
}
