use std::io::Write;

use serde::{Deserialize, Serialize};

use super::Method;
use crate::{GoatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    IterationCap,
    TimeCap,
    SingularOverlap,
    LineSearchFailure,
    /// The line search could not improve a point whose gradient is already
    /// tiny; usually the numerical floor of the goal.
    Stalled,
    DegenerateSimplex,
    NoFreeParameters,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::IterationCap => "iteration-cap",
            Status::TimeCap => "time-cap",
            Status::SingularOverlap => "singular-overlap",
            Status::LineSearchFailure => "line-search-failure",
            Status::Stalled => "stalled",
            Status::DegenerateSimplex => "degenerate-simplex",
            Status::NoFreeParameters => "no-free-parameters",
        }
    }

    pub fn is_cap(&self) -> bool {
        matches!(self, Status::IterationCap | Status::TimeCap)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Line-search outcome for one accepted quasi-Newton step, enough to check
/// the Wolfe conditions after the fact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchInfo {
    pub step: f64,
    pub f0: f64,
    pub slope0: f64,
    pub f1: f64,
    pub slope1: f64,
    pub c1: f64,
    pub c2: f64,
    pub evaluations: usize,
}

impl LineSearchInfo {
    pub fn sufficient_decrease(&self) -> bool {
        self.f1 <= self.f0 + self.c1 * self.step * self.slope0
    }

    pub fn strong_curvature(&self) -> bool {
        self.slope1.abs() <= self.c2 * self.slope0.abs()
    }

    pub fn strong_wolfe(&self) -> bool {
        self.sufficient_decrease() && self.strong_curvature()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub params: Vec<f64>,
    pub value: f64,
    /// `NaN` for derivative-free methods.
    pub gradient_norm: f64,
    /// Cumulative.
    pub hamiltonian_evaluations: usize,
    /// Cumulative goal evaluations.
    pub objective_calls: usize,
    /// Cumulative wall-clock since the start of the run.
    pub seconds: f64,
    pub line_search: Option<LineSearchInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub method: Method,
    pub records: Vec<TraceRecord>,
    pub status: Status,
}

pub(crate) const CSV_HEADER: [&str; 7] = [
    "iteration",
    "g",
    "best_g",
    "gradient_norm",
    "hamiltonian_evaluations",
    "objective_calls",
    "seconds",
];

impl OptimizationTrace {
    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("trace holds the initial evaluation")
    }

    pub fn final_value(&self) -> f64 {
        self.last().value
    }

    pub fn final_params(&self) -> &[f64] {
        &self.last().params
    }

    pub fn iterations(&self) -> usize {
        self.last().iteration
    }

    pub fn seconds(&self) -> f64 {
        self.last().seconds
    }

    /// Best-so-far goal value after each record.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.records
            .iter()
            .map(|r| {
                best = best.min(r.value);
                best
            })
            .collect()
    }

    /// Wall-clock at which the best-so-far value first reached `level`.
    pub fn time_to(&self, level: f64) -> Option<f64> {
        self.records.iter().find(|r| r.value <= level).map(|r| r.seconds)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| GoatError::Io(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for (r, best) in self.records.iter().zip(self.best_so_far()) {
            w.write_record([
                r.iteration.to_string(),
                format_float(r.value),
                format_float(best),
                format_float(r.gradient_norm),
                r.hamiltonian_evaluations.to_string(),
                r.objective_calls.to_string(),
                format!("{:.6}", r.seconds),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// JSON summary: method, status, final value and parameters, counts.
    pub fn summary_json(&self) -> serde_json::Value {
        let last = self.last();
        serde_json::json!({
            "method": self.method.to_string(),
            "status": self.status.as_str(),
            "iterations": last.iteration,
            "final_g": last.value,
            "final_gradient_norm": if last.gradient_norm.is_finite() {
                serde_json::json!(last.gradient_norm)
            } else {
                serde_json::Value::Null
            },
            "hamiltonian_evaluations": last.hamiltonian_evaluations,
            "objective_calls": last.objective_calls,
            "seconds": last.seconds,
            "final_params": last.params,
        })
    }
}

/// Shortest round-trip decimal in scientific notation; `NaN` and `inf` spelled out.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(iteration: usize, value: f64, seconds: f64) -> TraceRecord {
        TraceRecord {
            iteration,
            params: vec![0.5],
            value,
            gradient_norm: f64::NAN,
            hamiltonian_evaluations: iteration * 3,
            objective_calls: iteration,
            seconds,
            line_search: None,
        }
    }

    #[test]
    fn csv_schema_and_best_so_far() {
        let trace = OptimizationTrace {
            method: Method::NelderMead,
            records: vec![record(0, 0.5, 0.0), record(1, 0.7, 0.1), record(2, 0.1, 0.2)],
            status: Status::IterationCap,
        };
        assert_eq!(trace.best_so_far(), vec![0.5, 0.5, 0.1]);
        assert_eq!(trace.time_to(0.2), Some(0.2));
        let csv = trace.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.next().unwrap(), "0,5e-1,5e-1,NaN,0,0,0.000000");
        assert_eq!(trace.summary_json()["status"], "iteration-cap");
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }
}
