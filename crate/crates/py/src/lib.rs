//! Python module `goat`: problems from TOML configs, propagation, goals,
//! optimization and studies.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use goat_core::config::{parse_operator as parse_operator_core, ProblemConfig, ResolvedConfig};
use goat_core::densemath::ComplexMatrix;
use goat_core::gradcheck::gradient_check;
use goat_core::optimize::{optimize, Objective, OptimizationProblem, OptimizationTrace};
use goat_core::propagation::{propagate as propagate_core, reference_propagate};
use goat_core::studies::{
    run_dim_study, run_goat_vs_nm, run_high_accuracy_cnot, run_pwc_study, DimStudySpec, GoatVsNmSpec,
    HighAccuracySpec, PwcStudySpec, StudyOutput,
};
use goat_core::GoatError;

fn py_err(e: GoatError) -> PyErr {
    match e {
        GoatError::Config { .. }
        | GoatError::InvalidArgument(_)
        | GoatError::DimensionMismatch { .. }
        | GoatError::IndexOutOfRange { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    m.rows()
}

/// An optimization problem resolved from a TOML config.
#[pyclass(name = "Problem", frozen)]
struct PyProblem {
    resolved: ResolvedConfig,
    problem: OptimizationProblem,
}

impl PyProblem {
    fn params_or_initial(&self, params: Option<Vec<f64>>) -> Vec<f64> {
        params.unwrap_or_else(|| self.resolved.initial.clone())
    }
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let resolved = ProblemConfig::from_toml_str(text).and_then(|c| c.resolve()).map_err(py_err)?;
        let problem = resolved.problem().map_err(py_err)?;
        Ok(Self { resolved, problem })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.problem.hamiltonian.dim()
    }

    #[getter]
    fn n_slots(&self) -> usize {
        self.problem.initial.len()
    }

    #[getter]
    fn trainable_slots(&self) -> Vec<usize> {
        self.problem.ansatz.trainable_slots()
    }

    #[getter]
    fn initial(&self) -> Vec<f64> {
        self.resolved.initial.clone()
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.problem.duration
    }

    /// `U(T)` from the Taylor relay, as nested lists of complex numbers.
    #[pyo3(signature = (params=None))]
    fn propagate(&self, py: Python<'_>, params: Option<Vec<f64>>) -> PyResult<Vec<Vec<Complex64>>> {
        let p = self.params_or_initial(params);
        let pr = &self.problem;
        let r = py
            .detach(|| propagate_core(&pr.hamiltonian, pr.ansatz.as_ref(), &p, pr.duration, &pr.propagator, false))
            .map_err(py_err)?;
        Ok(rows(&r.propagator))
    }

    /// `U(T)` from the adaptive Dormand–Prince integrator.
    #[pyo3(signature = (params=None, tolerance=1e-14))]
    fn reference_propagate(&self, py: Python<'_>, params: Option<Vec<f64>>, tolerance: f64) -> PyResult<Vec<Vec<Complex64>>> {
        let p = self.params_or_initial(params);
        let pr = &self.problem;
        let u = py
            .detach(|| reference_propagate(&pr.hamiltonian, pr.ansatz.as_ref(), &p, pr.duration, tolerance))
            .map_err(py_err)?;
        Ok(rows(&u))
    }

    #[pyo3(signature = (params=None))]
    fn infidelity(&self, py: Python<'_>, params: Option<Vec<f64>>) -> PyResult<f64> {
        Ok(self.value_and_gradient(py, params)?.0)
    }

    /// Goal value and its gradient over the trainable slots.
    #[pyo3(signature = (params=None))]
    fn value_and_gradient(&self, py: Python<'_>, params: Option<Vec<f64>>) -> PyResult<(f64, Vec<f64>)> {
        let p = self.params_or_initial(params);
        if p.len() != self.problem.initial.len() {
            return Err(PyValueError::new_err(format!(
                "expected {} parameters, got {}",
                self.problem.initial.len(),
                p.len()
            )));
        }
        // Frozen slots take their values from `p`.
        let problem = self.problem.with_initial(p.clone());
        let v = py
            .detach(|| {
                let objective = problem.objective();
                objective.evaluate(&objective.restrict(&p), true)
            })
            .map_err(py_err)?;
        Ok((v.value, v.gradient.unwrap_or_default()))
    }

    /// Runs the configured optimizer from the resolved initial point.
    fn optimize(&self, py: Python<'_>) -> PyResult<PyTrace> {
        let trace = py.detach(|| optimize(&self.problem)).map_err(py_err)?;
        Ok(PyTrace { inner: trace })
    }

    /// `(max, median)` per-slot relative error against central differences.
    #[pyo3(signature = (params=None, step=1e-6))]
    fn gradcheck(&self, py: Python<'_>, params: Option<Vec<f64>>, step: f64) -> PyResult<(f64, f64)> {
        let p = self.params_or_initial(params);
        let report = py.detach(|| gradient_check(&self.problem, &p, step)).map_err(py_err)?;
        Ok((report.max_relative_error(), report.median_relative_error()))
    }
}

#[pyclass(name = "Trace", frozen)]
struct PyTrace {
    inner: OptimizationTrace,
}

#[pymethods]
impl PyTrace {
    #[getter]
    fn status(&self) -> &'static str {
        self.inner.status.as_str()
    }

    #[getter]
    fn final_value(&self) -> f64 {
        self.inner.final_value()
    }

    #[getter]
    fn final_params(&self) -> Vec<f64> {
        self.inner.final_params().to_vec()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations()
    }

    /// Goal value per record.
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.value).collect()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trace(status={}, final_value={:e}, iterations={})",
            self.status(),
            self.final_value(),
            self.iterations()
        )
    }
}

/// Matrix of a Pauli expression such as `"Z⊗Z + 0.5*XI"`.
#[pyfunction]
fn parse_operator(expr: &str) -> PyResult<Vec<Vec<Complex64>>> {
    parse_operator_core(expr).map(|m| rows(&m)).map_err(PyValueError::new_err)
}

fn spec<T: serde::de::DeserializeOwned + Default>(text: Option<&str>) -> PyResult<T> {
    match text {
        None => Ok(T::default()),
        Some(t) => toml::from_str(t).map_err(|e| PyValueError::new_err(e.to_string())),
    }
}

/// Runs a study (`pwc`, `dims`, `goat-vs-nm`, `cnot-hi`) from an optional
/// TOML spec. Returns `(summary_json, main_table_csv)`.
#[pyfunction]
#[pyo3(signature = (name, spec_toml=None))]
fn study(py: Python<'_>, name: &str, spec_toml: Option<&str>) -> PyResult<(String, String)> {
    let output: StudyOutput = match name {
        "pwc" => {
            let s: PwcStudySpec = spec(spec_toml)?;
            py.detach(|| run_pwc_study(&s).map(|r| r.output(&s)))
        }
        "dims" => {
            let s: DimStudySpec = spec(spec_toml)?;
            py.detach(|| run_dim_study(&s).map(|r| r.output(&s)))
        }
        "goat-vs-nm" => {
            let s: GoatVsNmSpec = spec(spec_toml)?;
            py.detach(|| run_goat_vs_nm(&s).map(|r| r.output(&s)))
        }
        "cnot-hi" => {
            let s: HighAccuracySpec = spec(spec_toml)?;
            py.detach(|| run_high_accuracy_cnot(&s).map(|r| r.output(&s)))
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown study `{other}`; expected pwc, dims, goat-vs-nm or cnot-hi"
            )))
        }
    }
    .map_err(py_err)?;
    Ok((output.summary.to_string(), output.table.to_csv_string()))
}

#[pymodule]
fn goat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", goat_core::VERSION)?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyTrace>()?;
    m.add_function(wrap_pyfunction!(parse_operator, m)?)?;
    m.add_function(wrap_pyfunction!(study, m)?)?;
    Ok(())
}
