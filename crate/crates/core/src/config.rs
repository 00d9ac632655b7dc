//! Declarative problem files (TOML).
//!
//! ```toml
//! schema_version = 1
//! duration = 4.0
//!
//! [hamiltonian]
//! drift = "Z⊗Z"
//! controls = ["XI", "YI", "IX", "IY"]
//!
//! [ansatz]
//! family = "fourier"
//! terms = 4
//!
//! [goal]
//! gate = "CNOT"
//!
//! [optimizer]
//! threshold = 1e-10
//! seed = 7
//! ```
//!
//! Operators are either expressions such as `"0.5*ZI - 0.5*IZ + X⊗X"` or
//! explicit matrices whose entries are `[re, im]` pairs.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::controls::{ControlAnsatz, FourierAnsatz, PwcAnsatz, SlotKind};
use crate::densemath::{pauli, ComplexMatrix, ComplexVector};
use crate::objective::{GateGoal, Goal, StateGoal};
use crate::optimize::{
    start_point, InitSettings, LineSearchSettings, Method, MultistartOptions, OptimizationProblem, StopConditions,
};
use crate::propagation::{ControlledHamiltonian, PropagatorSettings};
use crate::{GoatError, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn config_error(path: impl Into<String>, message: impl Into<String>) -> GoatError {
    GoatError::Config {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Expression(String),
    Matrix(Vec<Vec<[f64; 2]>>),
}

impl OperatorSpec {
    pub fn resolve(&self, path: &str) -> Result<ComplexMatrix> {
        match self {
            OperatorSpec::Expression(e) => parse_operator(e).map_err(|m| config_error(path, m)),
            OperatorSpec::Matrix(rows) => matrix_from_pairs(rows, path),
        }
    }
}

fn matrix_from_pairs(rows: &[Vec<[f64; 2]>], path: &str) -> Result<ComplexMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(config_error(path, "empty matrix"));
    }
    let mut data = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(config_error(
                format!("{path}[{i}]"),
                format!("row has {} entries, expected {n}", row.len()),
            ));
        }
        data.extend(row.iter().map(|[re, im]| Complex64::new(*re, *im)));
    }
    ComplexMatrix::from_vec(n, data).map_err(|e| config_error(path, e.to_string()))
}

fn vector_from_pairs(entries: &[[f64; 2]], path: &str) -> Result<ComplexVector> {
    ComplexVector::from_vec(entries.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())
        .map_err(|e| config_error(path, e.to_string()))
}

/// Parses sums of optionally scaled Pauli products: `"Z⊗Z"`, `"ZZ"`,
/// `"0.5*ZI - 0.5 IZ"`, `"-X⊗I + 2e-1*I⊗X"`.
pub fn parse_operator(expr: &str) -> std::result::Result<ComplexMatrix, String> {
    let chars: Vec<char> = expr.chars().filter(|c| !c.is_whitespace()).collect();
    if chars.is_empty() {
        return Err("empty operator expression".into());
    }
    let mut total: Option<ComplexMatrix> = None;
    let mut i = 0;
    while i < chars.len() {
        let mut sign = 1.0;
        while i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
            if chars[i] == '-' {
                sign = -sign;
            }
            i += 1;
        }
        let start = i;
        while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
            i += 1;
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
            }
        }
        let coefficient = if i > start {
            let text: String = chars[start..i].iter().collect();
            let value: f64 = text.parse().map_err(|_| format!("bad coefficient `{text}`"))?;
            if i < chars.len() && chars[i] == '*' {
                i += 1;
            }
            value
        } else {
            1.0
        };

        let mut product: Option<ComplexMatrix> = None;
        loop {
            let start = i;
            while i < chars.len() && "IXYZ".contains(chars[i]) {
                i += 1;
            }
            if i == start {
                let found = chars.get(i).map_or("end of input".to_string(), |c| format!("`{c}`"));
                return Err(format!("expected a Pauli string in `{expr}`, found {found}"));
            }
            let text: String = chars[start..i].iter().collect();
            let factor = pauli::pauli_string(&text).map_err(|e| e.to_string())?;
            product = Some(match product {
                None => factor,
                Some(p) => p.kron(&factor),
            });
            if i < chars.len() && chars[i] == '⊗' {
                i += 1;
            } else {
                break;
            }
        }
        let term = product.expect("at least one factor").scale_real(sign * coefficient);
        total = Some(match total {
            None => term,
            Some(mut t) => {
                if t.dim() != term.dim() {
                    return Err(format!("terms of `{expr}` act on different dimensions ({} vs {})", t.dim(), term.dim()));
                }
                t.axpy_real(1.0, &term);
                t
            }
        });
        if i < chars.len() && chars[i] != '+' && chars[i] != '-' {
            return Err(format!("unexpected `{}` in `{expr}`", chars[i]));
        }
    }
    Ok(total.expect("nonempty expression"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    pub drift: OperatorSpec,
    pub controls: Vec<OperatorSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzFamily {
    Fourier,
    Pwc,
    PwcFlexible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Terms {
    Uniform(usize),
    PerControl(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    pub family: AnsatzFamily,
    /// Fourier terms, for all controls or per control.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Terms>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slices: Option<usize>,
    /// Fourier slot kinds left trainable (default: all).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trainable: Option<Vec<SlotKind>>,
    /// Slot indices held at their initial values.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frozen: Vec<usize>,
    /// Full initial parameter vector; drawn from the optimizer seed if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalConfig {
    /// `"CNOT"`, an operator expression or a matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<OperatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: Method,
    pub threshold: f64,
    pub max_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_seconds: Option<f64>,
    pub seed: u64,
    /// Random starts; more than one runs a multistart.
    pub starts: usize,
    pub simplex_step: f64,
    pub init: InitSettings,
    pub line_search: LineSearchSettings,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let stop = StopConditions::default();
        Self {
            method: Method::Bfgs,
            threshold: stop.threshold,
            max_iterations: stop.max_iterations,
            max_seconds: stop.max_seconds,
            seed: 0,
            starts: 1,
            simplex_step: 0.1,
            init: InitSettings::default(),
            line_search: LineSearchSettings::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn stop(&self) -> StopConditions {
        StopConditions {
            threshold: self.threshold,
            max_iterations: self.max_iterations,
            max_seconds: self.max_seconds,
        }
    }

    pub fn multistart_options(&self) -> MultistartOptions {
        let mut options = MultistartOptions::new(self.starts.max(1), self.seed);
        options.init = self.init.clone();
        options
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub schema_version: u32,
    pub duration: f64,
    pub hamiltonian: HamiltonianConfig,
    pub ansatz: AnsatzConfig,
    pub goal: GoalConfig,
    #[serde(default)]
    pub propagator: PropagatorSettings,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

impl ProblemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| config_error("<document>", e.to_string().trim_end()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(config_error(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", config.schema_version),
            ));
        }
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GoatError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_error("<document>", e.to_string()))
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(config_error("duration", "must be positive and finite"));
        }
        let drift = self.hamiltonian.drift.resolve("hamiltonian.drift")?;
        let dim = drift.dim();
        let mut controls = Vec::with_capacity(self.hamiltonian.controls.len());
        for (k, c) in self.hamiltonian.controls.iter().enumerate() {
            let path = format!("hamiltonian.controls[{k}]");
            let m = c.resolve(&path)?;
            if m.dim() != dim {
                return Err(config_error(path, format!("dimension {} does not match drift dimension {dim}", m.dim())));
            }
            controls.push(m);
        }
        if controls.is_empty() {
            return Err(config_error("hamiltonian.controls", "at least one control is required"));
        }
        let n_controls = controls.len();
        let hamiltonian =
            ControlledHamiltonian::new(drift, controls).map_err(|e| config_error("hamiltonian", e.to_string()))?;

        let ansatz = self.resolve_ansatz(n_controls)?;
        let goal = self.resolve_goal(dim)?;

        self.propagator.validate().map_err(|e| config_error("propagator", e.to_string()))?;
        self.optimizer.stop().validate().map_err(|e| config_error("optimizer", e.to_string()))?;
        self.optimizer.init.validate().map_err(|e| config_error("optimizer.init", e.to_string()))?;
        self.optimizer
            .line_search
            .validate()
            .map_err(|e| config_error("optimizer.line_search", e.to_string()))?;
        if self.optimizer.starts == 0 {
            return Err(config_error("optimizer.starts", "must be at least 1"));
        }

        let built = ansatz.build(self.duration)?;
        let initial = match &self.ansatz.initial {
            Some(v) => {
                if v.len() != built.n_slots() {
                    return Err(config_error(
                        "ansatz.initial",
                        format!("has {} entries, the ansatz has {} slots", v.len(), built.n_slots()),
                    ));
                }
                v.clone()
            }
            None => {
                let base = OptimizationProblem::new(
                    hamiltonian.clone(),
                    built.clone(),
                    goal.clone(),
                    default_base(built.as_ref()),
                )?;
                start_point(&base, &self.optimizer.multistart_options(), 0)
            }
        };
        if initial.iter().any(|x| !x.is_finite()) {
            return Err(config_error("ansatz.initial", "entries must be finite"));
        }
        Ok(ResolvedConfig {
            hamiltonian,
            ansatz,
            goal,
            duration: self.duration,
            initial,
            propagator: self.propagator.clone(),
            optimizer: self.optimizer.clone(),
        })
    }

    fn resolve_ansatz(&self, n_controls: usize) -> Result<ResolvedAnsatz> {
        let a = &self.ansatz;
        let (terms, slices) = match a.family {
            AnsatzFamily::Fourier => {
                if a.slices.is_some() {
                    return Err(config_error("ansatz.slices", "not used by the fourier family"));
                }
                let terms = match &a.terms {
                    None => return Err(config_error("ansatz.terms", "required for the fourier family")),
                    Some(Terms::Uniform(n)) => vec![*n; n_controls],
                    Some(Terms::PerControl(v)) => {
                        if v.len() != n_controls {
                            return Err(config_error(
                                "ansatz.terms",
                                format!("{} entries for {n_controls} controls", v.len()),
                            ));
                        }
                        v.clone()
                    }
                };
                (terms, 0)
            }
            AnsatzFamily::Pwc | AnsatzFamily::PwcFlexible => {
                if a.terms.is_some() || a.trainable.is_some() {
                    return Err(config_error("ansatz", "terms and trainable apply to the fourier family only"));
                }
                match a.slices {
                    Some(s) if s > 0 => (Vec::new(), s),
                    _ => return Err(config_error("ansatz.slices", "a positive slice count is required")),
                }
            }
        };
        let mut resolved = ResolvedAnsatz {
            family: a.family,
            terms,
            slices,
            n_controls,
            trainable: Vec::new(),
        };
        let mut ansatz = resolved.build_unmasked(self.duration)?;
        if let Some(kinds) = &a.trainable {
            if let Some(fourier) = ansatz.as_any_fourier() {
                ansatz = AnyAnsatz::Fourier(fourier.with_trainable_kinds(kinds));
            }
        }
        let mut mask: Vec<bool> = ansatz.as_dyn().layout().iter().map(|d| d.trainable).collect();
        for &slot in &a.frozen {
            if slot >= mask.len() {
                return Err(config_error(
                    "ansatz.frozen",
                    format!("slot {slot} out of range for {} slots", mask.len()),
                ));
            }
            mask[slot] = false;
        }
        resolved.trainable = mask;
        Ok(resolved)
    }

    fn resolve_goal(&self, dim: usize) -> Result<Goal> {
        let g = &self.goal;
        match (&g.gate, &g.initial, &g.target) {
            (Some(gate), None, None) => {
                let target = match gate {
                    OperatorSpec::Expression(name) if name.trim().eq_ignore_ascii_case("cnot") => pauli::cnot(),
                    other => other.resolve("goal.gate")?,
                };
                if target.dim() != dim {
                    return Err(config_error(
                        "goal.gate",
                        format!("dimension {} does not match Hamiltonian dimension {dim}", target.dim()),
                    ));
                }
                Ok(Goal::Gate(GateGoal::new(target).map_err(|e| config_error("goal.gate", e.to_string()))?))
            }
            (None, Some(initial), Some(target)) => {
                let initial = vector_from_pairs(initial, "goal.initial")?;
                let target = vector_from_pairs(target, "goal.target")?;
                for (path, v) in [("goal.initial", &initial), ("goal.target", &target)] {
                    if v.dim() != dim {
                        return Err(config_error(
                            path,
                            format!("dimension {} does not match Hamiltonian dimension {dim}", v.dim()),
                        ));
                    }
                }
                Ok(Goal::State(
                    StateGoal::new(initial, target).map_err(|e| config_error("goal", e.to_string()))?,
                ))
            }
            _ => Err(config_error("goal", "give either `gate` or both `initial` and `target`")),
        }
    }
}

/// Neutral values for slots that are never drawn: zero, except Fourier
/// frequencies which start at one.
fn default_base(ansatz: &dyn ControlAnsatz) -> Vec<f64> {
    ansatz
        .layout()
        .iter()
        .map(|d| if d.kind == SlotKind::Frequency { 1.0 } else { 0.0 })
        .collect()
}

enum AnyAnsatz {
    Fourier(FourierAnsatz),
    Pwc(PwcAnsatz),
}

impl AnyAnsatz {
    fn as_dyn(&self) -> &dyn ControlAnsatz {
        match self {
            AnyAnsatz::Fourier(a) => a,
            AnyAnsatz::Pwc(a) => a,
        }
    }

    fn as_any_fourier(&self) -> Option<FourierAnsatz> {
        match self {
            AnyAnsatz::Fourier(a) => Some(a.clone()),
            AnyAnsatz::Pwc(_) => None,
        }
    }
}

/// The ansatz after defaults are applied, with an explicit trainability mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedAnsatz {
    pub family: AnsatzFamily,
    pub terms: Vec<usize>,
    pub slices: usize,
    pub n_controls: usize,
    pub trainable: Vec<bool>,
}

impl ResolvedAnsatz {
    fn build_unmasked(&self, duration: f64) -> Result<AnyAnsatz> {
        let wrap = |e: GoatError| config_error("ansatz", e.to_string());
        Ok(match self.family {
            AnsatzFamily::Fourier => AnyAnsatz::Fourier(FourierAnsatz::new(duration, self.terms.clone()).map_err(wrap)?),
            AnsatzFamily::Pwc => AnyAnsatz::Pwc(PwcAnsatz::uniform(duration, self.slices, self.n_controls).map_err(wrap)?),
            AnsatzFamily::PwcFlexible => {
                AnyAnsatz::Pwc(PwcAnsatz::flexible(duration, self.slices, self.n_controls).map_err(wrap)?)
            }
        })
    }

    pub fn build(&self, duration: f64) -> Result<Arc<dyn ControlAnsatz>> {
        Ok(match self.build_unmasked(duration)? {
            AnyAnsatz::Fourier(mut a) => {
                for (slot, &t) in self.trainable.iter().enumerate() {
                    a.set_trainable(slot, t);
                }
                Arc::new(a)
            }
            AnyAnsatz::Pwc(mut a) => {
                for (slot, &t) in self.trainable.iter().enumerate() {
                    a.set_trainable(slot, t);
                }
                Arc::new(a)
            }
        })
    }
}

/// A config with every default filled in and every operator built.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub hamiltonian: ControlledHamiltonian,
    pub ansatz: ResolvedAnsatz,
    pub goal: Goal,
    pub duration: f64,
    pub initial: Vec<f64>,
    pub propagator: PropagatorSettings,
    pub optimizer: OptimizerConfig,
}

impl ResolvedConfig {
    pub fn problem(&self) -> Result<OptimizationProblem> {
        let ansatz = self.ansatz.build(self.duration)?;
        let mut problem = OptimizationProblem::new(self.hamiltonian.clone(), ansatz, self.goal.clone(), self.initial.clone())?;
        problem.propagator = self.propagator.clone();
        problem.stop = self.optimizer.stop();
        problem.method = self.optimizer.method;
        problem.line_search = self.optimizer.line_search.clone();
        problem.simplex_step = self.optimizer.simplex_step;
        problem.validate()?;
        Ok(problem)
    }
}

/// Ising CNOT example used by the CLI and the tests.
pub const ISING_CNOT_EXAMPLE: &str = r#"schema_version = 1
duration = 4.0

[hamiltonian]
drift = "Z⊗Z"
controls = ["X⊗I", "Y⊗I", "I⊗X", "I⊗Y"]

[ansatz]
family = "fourier"
terms = 4

[goal]
gate = "CNOT"

[propagator]
taylor_order = 20

[optimizer]
threshold = 1e-10
max_iterations = 500
seed = 7
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densemath::pauli::{x, z};

    #[test]
    fn expressions() {
        let zz = parse_operator("Z⊗Z").unwrap();
        assert_eq!(zz, parse_operator("ZZ").unwrap());
        assert_eq!(zz, z().kron(&z()));
        let m = parse_operator("0.5*ZI - 0.5 IZ").unwrap();
        let mut expected = z().kron(&pauli::identity()).scale_real(0.5);
        expected.axpy_real(-0.5, &pauli::identity().kron(&z()));
        assert!(m.distance(&expected) < 1e-15);
        assert_eq!(parse_operator("-2e-1*X").unwrap(), x().scale_real(-0.2));
        assert_eq!(parse_operator(" X + - X ").unwrap(), ComplexMatrix::zeros(2));
    }

    #[test]
    fn bad_expressions() {
        for e in ["", "2*", "X+ZZ", "Q", "X⊗", "1.2.3*X", "X)"] {
            assert!(parse_operator(e).is_err(), "{e}");
        }
    }

    #[test]
    fn example_resolves_to_ising_problem() {
        let config = ProblemConfig::from_toml_str(ISING_CNOT_EXAMPLE).unwrap();
        let resolved = config.resolve().unwrap();
        assert_eq!(resolved.hamiltonian.dim(), 4);
        assert_eq!(resolved.hamiltonian.n_controls(), 4);
        assert_eq!(resolved.initial.len(), 48);
        assert!(resolved.ansatz.trainable.iter().all(|&t| t));
        let problem = resolved.problem().unwrap();
        assert_eq!(problem.propagator.taylor_order, 20);
        assert_eq!(problem.stop.max_iterations, 500);
    }

    #[test]
    fn round_trip_is_identity() {
        let config = ProblemConfig::from_toml_str(ISING_CNOT_EXAMPLE).unwrap();
        let text = config.to_toml_string().unwrap();
        let again = ProblemConfig::from_toml_str(&text).unwrap();
        assert_eq!(config, again);
        assert_eq!(config.resolve().unwrap(), again.resolve().unwrap());
    }

    #[test]
    fn matrix_operators_and_state_goal() {
        let text = r#"
schema_version = 1
duration = 1.0
[hamiltonian]
drift = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-1.0, 0.0]]]
controls = ["X"]
[ansatz]
family = "pwc-flexible"
slices = 3
frozen = [1]
initial = [0.1, 0.0, 0.2, 0.0, 0.3, 0.0]
[goal]
initial = [[1.0, 0.0], [0.0, 0.0]]
target = [[0.0, 0.0], [1.0, 0.0]]
"#;
        let config = ProblemConfig::from_toml_str(text).unwrap();
        let resolved = config.resolve().unwrap();
        assert_eq!(resolved.hamiltonian.drift(), &z());
        assert!(!resolved.ansatz.trainable[1]);
        assert!(matches!(resolved.goal, Goal::State(_)));
        let again = ProblemConfig::from_toml_str(&config.to_toml_string().unwrap()).unwrap();
        assert_eq!(resolved, again.resolve().unwrap());
    }

    fn error_path(text: &str) -> String {
        match ProblemConfig::from_toml_str(text).and_then(|c| c.resolve()) {
            Err(GoatError::Config { path, .. }) => path,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        let bad_dim = ISING_CNOT_EXAMPLE.replace(r#""I⊗X", "I⊗Y""#, r#""I⊗X", "X""#);
        assert_eq!(error_path(&bad_dim), "hamiltonian.controls[3]");
        let bad_goal = ISING_CNOT_EXAMPLE.replace(r#"gate = "CNOT""#, r#"gate = "X""#);
        assert_eq!(error_path(&bad_goal), "goal.gate");
        let bad_version = ISING_CNOT_EXAMPLE.replace("schema_version = 1", "schema_version = 9");
        assert_eq!(error_path(&bad_version), "schema_version");
        let ragged = ISING_CNOT_EXAMPLE.replace(r#"drift = "Z⊗Z""#, "drift = [[[1.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]");
        assert_eq!(error_path(&ragged), "hamiltonian.drift[0]");
        let frozen = ISING_CNOT_EXAMPLE.replace("terms = 4", "terms = 4\nfrozen = [48]");
        assert_eq!(error_path(&frozen), "ansatz.frozen");
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let text = ISING_CNOT_EXAMPLE.replace("[goal]", "[goal]\ngaet = 1");
        let err = ProblemConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("gaet") && err.contains("line"), "{err}");
    }

    #[test]
    fn seed_controls_the_drawn_start() {
        let a = ProblemConfig::from_toml_str(ISING_CNOT_EXAMPLE).unwrap();
        let mut b = a.clone();
        b.optimizer.seed = 8;
        assert_eq!(a.resolve().unwrap().initial, a.resolve().unwrap().initial);
        assert_ne!(a.resolve().unwrap().initial, b.resolve().unwrap().initial);
    }
}
