//! Desk-scale numerical studies. Each study is a pure function of its spec
//! (wall-clock columns aside) and returns tables ready for plotting.

mod benchmark;
mod dims;
mod pwc_study;
mod table;

use serde::Serialize;

pub use benchmark::{
    build_benchmark, run_goat_vs_nm, run_high_accuracy_cnot, BenchmarkKind, BenchmarkSpec,
    GoatVsNmSpec, HighAccuracySpec,
};
pub use dims::{run_dim_study, DimStudySpec, Parametrization, Task};
pub use pwc_study::{run_pwc_study, PwcStudySpec};
pub use table::Table;

use crate::optimize::OptimizationTrace;
use crate::optimize::format_float;

/// Everything a study emits.
#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub name: &'static str,
    /// Main table, written as `<name>.csv`.
    pub table: Table,
    /// Further named tables.
    pub tables: Vec<(String, Table)>,
    /// Named optimization traces.
    pub traces: Vec<(String, OptimizationTrace)>,
    /// Headline numbers for the manifest.
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Least-squares line through `(x, y)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        points: n,
    })
}

pub(crate) fn f(v: f64) -> String {
    format_float(v)
}
