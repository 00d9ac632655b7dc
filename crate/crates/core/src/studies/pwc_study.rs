use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{f, linear_fit, LinearFit, StudyOutput, Table};
use crate::controls::FourierAnsatz;
use crate::densemath::{random_hermitian_with, random_unitary_with, rng_from_seed, ComplexMatrix};
use crate::objective::{gate_infidelity, GateGoal};
use crate::propagation::{propagate, pwc_propagate, reference_propagate, ControlledHamiltonian, PropagatorSettings, Sampling};
use crate::{GoatError, Result};

/// Random drift, one random control with a seeded multi-term Fourier pulse
/// and a Haar-random target gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PwcStudySpec {
    pub qubits: usize,
    pub seed: u64,
    /// Strictly increasing.
    pub slice_counts: Vec<usize>,
    pub duration: f64,
    pub terms: usize,
    /// Fourier amplitudes are uniform in `[-amplitude, amplitude]`.
    pub amplitude: f64,
    /// Log-uniform frequency band.
    pub frequency_band: (f64, f64),
    pub drift_scale: f64,
    pub reference_tolerance: f64,
    /// Slopes are fitted on slice counts at or above this.
    pub fit_min_slices: usize,
    /// Errors at or below this are treated as reference noise and not fitted.
    pub noise_floor: f64,
    /// Error level whose midpoint slice count is reported.
    pub target_error: f64,
}

/// `10^1 .. 10^6` at two points per decade.
pub fn default_slice_counts() -> Vec<usize> {
    (2..=12).map(|k| 10f64.powf(k as f64 / 2.0).round() as usize).collect()
}

impl Default for PwcStudySpec {
    fn default() -> Self {
        Self {
            qubits: 3,
            seed: 1,
            slice_counts: default_slice_counts(),
            duration: 4.0,
            terms: 4,
            amplitude: 1.0,
            frequency_band: (0.5, 5.0),
            drift_scale: 0.5,
            reference_tolerance: 1e-14,
            fit_min_slices: 1000,
            noise_floor: 1e-11,
            target_error: 1e-8,
        }
    }
}

impl PwcStudySpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GoatError::InvalidArgument(m.to_string()));
        if !(1..=6).contains(&self.qubits) {
            return bad("qubits must be in 1..=6");
        }
        if self.slice_counts.is_empty() || self.slice_counts.windows(2).any(|w| w[0] >= w[1]) || self.slice_counts[0] == 0 {
            return bad("slice counts must be positive and strictly increasing");
        }
        if !(self.duration > 0.0) || self.terms == 0 || !(self.amplitude >= 0.0) || !(self.drift_scale >= 0.0) {
            return bad("duration, terms, amplitude and drift scale must be positive");
        }
        let (lo, hi) = self.frequency_band;
        if !(lo > 0.0 && lo <= hi) {
            return bad("frequency band must be positive and ordered");
        }
        if !(self.target_error > 0.0 && self.noise_floor >= 0.0) {
            return bad("target error must be positive");
        }
        Ok(())
    }

    /// The seeded Hamiltonian, ansatz, control parameters and goal.
    pub fn problem(&self) -> Result<(ControlledHamiltonian, FourierAnsatz, Vec<f64>, GateGoal)> {
        self.validate()?;
        let dim = 1usize << self.qubits;
        let mut rng = rng_from_seed(self.seed);
        let drift = random_hermitian_with(dim, &mut rng).scale_real(self.drift_scale);
        let control = random_hermitian_with(dim, &mut rng);
        let target = random_unitary_with(dim, &mut rng);
        let ansatz = FourierAnsatz::new(self.duration, vec![self.terms])?;
        let (lo, hi) = self.frequency_band;
        let mut params = Vec::with_capacity(3 * self.terms);
        for _ in 0..self.terms {
            let a = self.amplitude * (2.0 * rng.random::<f64>() - 1.0);
            let w = (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp();
            let phi = std::f64::consts::TAU * rng.random::<f64>();
            params.extend([a, w, phi]);
        }
        let ham = ControlledHamiltonian::new(drift, vec![control])?;
        Ok((ham, ansatz, params, GateGoal::new(target)?))
    }
}

#[derive(Debug, Clone)]
pub struct PwcStudyResult {
    pub table: Table,
    pub g_reference: f64,
    pub g_relay: f64,
    /// `||U_relay - U_reference||_F`.
    pub relay_deviation: f64,
    pub fit_start: Option<LinearFit>,
    pub fit_midpoint: Option<LinearFit>,
    /// Log-interpolated midpoint slice count reaching `target_error`.
    pub midpoint_slices_to_target: Option<f64>,
}

const HEADER: [&str; 6] = ["slices", "sampling", "g_pwc", "g_reference", "relative_error", "seconds"];

fn sampling_name(s: Sampling) -> &'static str {
    match s {
        Sampling::Start => "start",
        Sampling::Midpoint => "midpoint",
    }
}

pub fn run_pwc_study(spec: &PwcStudySpec) -> Result<PwcStudyResult> {
    let (ham, ansatz, params, goal) = spec.problem()?;
    let u_ref = reference_propagate(&ham, &ansatz, &params, spec.duration, spec.reference_tolerance)?;
    let g_ref = gate_infidelity(&u_ref, &goal)?;
    let relay = propagate(&ham, &ansatz, &params, spec.duration, &PropagatorSettings::default(), false)?;
    let g_relay = gate_infidelity(&relay.propagator, &goal)?;

    let cells: Vec<(Sampling, usize)> = [Sampling::Start, Sampling::Midpoint]
        .into_iter()
        .flat_map(|s| spec.slice_counts.iter().map(move |&n| (s, n)))
        .collect();
    let rows: Vec<Result<(Sampling, usize, f64, f64)>> = cells
        .par_iter()
        .map(|&(s, n)| {
            let t0 = Instant::now();
            let u: ComplexMatrix = pwc_propagate(&ham, &ansatz, &params, spec.duration, n, s)?;
            let g = gate_infidelity(&u, &goal)?;
            Ok((s, n, g, t0.elapsed().as_secs_f64()))
        })
        .collect();

    let mut table = Table::new(&HEADER, &["seconds"]);
    let mut errors: Vec<(Sampling, usize, f64)> = Vec::new();
    for row in rows {
        let (s, n, g, secs) = row?;
        let rel = (g - g_ref).abs() / g_ref.max(1e-15);
        errors.push((s, n, rel));
        table.push(vec![
            n.to_string(),
            sampling_name(s).into(),
            f(g),
            f(g_ref),
            f(rel),
            format!("{secs:.6}"),
        ]);
    }

    let fit = |s: Sampling| {
        let (x, y): (Vec<f64>, Vec<f64>) = errors
            .iter()
            .filter(|(ss, n, e)| *ss == s && *n >= spec.fit_min_slices && *e > spec.noise_floor)
            .map(|(_, n, e)| ((*n as f64).log10(), e.log10()))
            .unzip();
        linear_fit(&x, &y)
    };
    let midpoint: Vec<(usize, f64)> = errors
        .iter()
        .filter(|(s, _, _)| *s == Sampling::Midpoint)
        .map(|(_, n, e)| (*n, *e))
        .collect();

    Ok(PwcStudyResult {
        table,
        g_reference: g_ref,
        g_relay,
        relay_deviation: relay.propagator.distance(&u_ref),
        fit_start: fit(Sampling::Start),
        fit_midpoint: fit(Sampling::Midpoint),
        midpoint_slices_to_target: crossing(&midpoint, spec.target_error),
    })
}

/// First crossing of `level` by a decreasing error sequence, interpolated
/// linearly in log-log coordinates.
fn crossing(points: &[(usize, f64)], level: f64) -> Option<f64> {
    let i = points.iter().position(|(_, e)| *e <= level)?;
    if i == 0 {
        return Some(points[0].0 as f64);
    }
    let (n0, e0) = (points[i - 1].0 as f64, points[i - 1].1);
    let (n1, e1) = (points[i].0 as f64, points[i].1);
    let t = (e0.log10() - level.log10()) / (e0.log10() - e1.log10());
    Some(10f64.powf(n0.log10() + t * (n1.log10() - n0.log10())))
}

impl PwcStudyResult {
    pub fn output(&self, spec: &PwcStudySpec) -> StudyOutput {
        let fit_json = |fit: &Option<LinearFit>| serde_json::to_value(fit).unwrap_or(serde_json::Value::Null);
        StudyOutput {
            name: "pwc",
            table: self.table.clone(),
            tables: Vec::new(),
            traces: Vec::new(),
            summary: serde_json::json!({
                "spec": spec,
                "g_reference": self.g_reference,
                "g_relay": self.g_relay,
                "relay_deviation": self.relay_deviation,
                "fit_start": fit_json(&self.fit_start),
                "fit_midpoint": fit_json(&self.fit_midpoint),
                "midpoint_slices_to_target": self.midpoint_slices_to_target,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = default_slice_counts();
        assert_eq!(g.first(), Some(&10));
        assert_eq!(g.last(), Some(&1_000_000));
        assert_eq!(g[1], 32);
        assert_eq!(g.len(), 11);
    }

    #[test]
    fn crossing_interpolates_in_log_space() {
        let pts = [(10, 1e-4), (100, 1e-6), (1000, 1e-10)];
        assert!((crossing(&pts, 1e-8).unwrap() - 10f64.powf(2.5)).abs() < 1e-9);
        assert_eq!(crossing(&pts, 1e-3), Some(10.0));
        assert_eq!(crossing(&pts, 1e-12), None);
    }

    #[test]
    fn rejects_unsorted_slices() {
        let spec = PwcStudySpec {
            slice_counts: vec![10, 5],
            ..Default::default()
        };
        assert!(run_pwc_study(&spec).is_err());
    }

    #[test]
    fn small_study_schema() {
        let spec = PwcStudySpec {
            qubits: 1,
            slice_counts: vec![10, 100],
            ..Default::default()
        };
        let r = run_pwc_study(&spec).unwrap();
        assert_eq!(r.table.rows.len(), 4);
        assert_eq!(r.table.header, HEADER);
        assert_eq!(r.table.rows[0][1], "start");
        assert_eq!(r.table.rows[2][1], "midpoint");
    }
}
