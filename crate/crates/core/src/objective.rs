//! Goal functions and their gradients from the propagator gradient stack.

use num_complex::Complex64;

use crate::densemath::{pauli, ComplexMatrix, ComplexVector};
use crate::{GoatError, Result};

/// Below this overlap modulus the gate-goal gradient is undefined.
pub const SINGULAR_OVERLAP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct GateGoal {
    target: ComplexMatrix,
}

impl GateGoal {
    pub fn new(target: ComplexMatrix) -> Result<Self> {
        let defect = target.unitarity_defect();
        if !(defect <= 1e-10) {
            return Err(GoatError::InvalidArgument(format!(
                "target gate is not unitary (defect {defect:e})"
            )));
        }
        Ok(Self { target })
    }

    pub fn cnot() -> Self {
        Self { target: pauli::cnot() }
    }

    pub fn target(&self) -> &ComplexMatrix {
        &self.target
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    /// `Tr(U_goal^dagger U)`.
    pub fn overlap(&self, u: &ComplexMatrix) -> Result<Complex64> {
        check_dim("gate goal", self.dim(), u.dim())?;
        Ok(self.target.inner(u))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateGoal {
    initial: ComplexVector,
    target: ComplexVector,
}

impl StateGoal {
    pub fn new(initial: ComplexVector, target: ComplexVector) -> Result<Self> {
        check_dim("state goal", initial.dim(), target.dim())?;
        for (name, v) in [("initial", &initial), ("target", &target)] {
            if (v.norm() - 1.0).abs() > 1e-12 {
                return Err(GoatError::InvalidArgument(format!(
                    "{name} state is not normalized (norm {})",
                    v.norm()
                )));
            }
        }
        Ok(Self { initial, target })
    }

    pub fn initial(&self) -> &ComplexVector {
        &self.initial
    }

    pub fn target(&self) -> &ComplexVector {
        &self.target
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    /// `<psi_goal|psi_T>`.
    pub fn overlap(&self, psi_t: &ComplexVector) -> Result<Complex64> {
        check_dim("state goal", self.dim(), psi_t.dim())?;
        Ok(self.target.inner(psi_t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Goal {
    Gate(GateGoal),
    State(StateGoal),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalEvaluation {
    pub value: f64,
    /// One entry per trainable slot.
    pub gradient: Vec<f64>,
    /// Raw `Tr(U_goal^dagger U)` or `<psi_goal|psi_T>`.
    pub overlap: Complex64,
}

fn check_dim(context: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(GoatError::DimensionMismatch {
            context,
            left,
            right,
        });
    }
    Ok(())
}

/// `g = 1 - |Tr(U_goal^dagger U)| / d`.
pub fn gate_infidelity(u: &ComplexMatrix, goal: &GateGoal) -> Result<f64> {
    let z = goal.overlap(u)?;
    Ok((1.0 - z.norm() / goal.dim() as f64).max(0.0))
}

/// `dg = -Re(conj(z)/|z| Tr(U_goal^dagger dU)) / d` with `z` the trace overlap.
pub fn gate_goal_gradient(
    u: &ComplexMatrix,
    gradients: &[ComplexMatrix],
    goal: &GateGoal,
) -> Result<Vec<f64>> {
    let z = goal.overlap(u)?;
    let modulus = z.norm();
    if gradients.is_empty() {
        return Ok(Vec::new());
    }
    if modulus < SINGULAR_OVERLAP {
        return Err(GoatError::SingularOverlap { modulus });
    }
    let phase = z.conj() / modulus;
    let d = goal.dim() as f64;
    gradients
        .iter()
        .map(|du| {
            check_dim("gate goal gradient", goal.dim(), du.dim())?;
            Ok(-(phase * goal.target.inner(du)).re / d)
        })
        .collect()
}

/// `g = 1 - |<psi_goal|psi_T>|^2`.
pub fn state_infidelity(psi_t: &ComplexVector, goal: &StateGoal) -> Result<f64> {
    let z = goal.overlap(psi_t)?;
    Ok((1.0 - z.norm_sqr()).max(0.0))
}

/// `dg = -2 Re(conj(z) dz)`.
pub fn state_goal_gradient(
    psi_t: &ComplexVector,
    gradients: &[ComplexVector],
    goal: &StateGoal,
) -> Result<Vec<f64>> {
    let z = goal.overlap(psi_t)?;
    gradients
        .iter()
        .map(|dpsi| {
            check_dim("state goal gradient", goal.dim(), dpsi.dim())?;
            Ok(-2.0 * (z.conj() * goal.target.inner(dpsi)).re)
        })
        .collect()
}

impl Goal {
    pub fn dim(&self) -> usize {
        match self {
            Goal::Gate(g) => g.dim(),
            Goal::State(s) => s.dim(),
        }
    }

    /// Goal value for a full propagator `U(T)`.
    pub fn infidelity(&self, u: &ComplexMatrix) -> Result<f64> {
        match self {
            Goal::Gate(g) => gate_infidelity(u, g),
            Goal::State(s) => state_infidelity(&u.apply(s.initial())?, s),
        }
    }

    pub fn overlap(&self, u: &ComplexMatrix) -> Result<Complex64> {
        match self {
            Goal::Gate(g) => g.overlap(u),
            Goal::State(s) => s.overlap(&u.apply(s.initial())?),
        }
    }

    /// Value and gradient from `U(T)` and `dU(T)/d(alpha_s)`.
    pub fn evaluate(&self, u: &ComplexMatrix, gradients: &[ComplexMatrix]) -> Result<GoalEvaluation> {
        match self {
            Goal::Gate(g) => Ok(GoalEvaluation {
                value: gate_infidelity(u, g)?,
                gradient: gate_goal_gradient(u, gradients, g)?,
                overlap: g.overlap(u)?,
            }),
            Goal::State(s) => {
                let psi_t = u.apply(s.initial())?;
                let dpsi = gradients
                    .iter()
                    .map(|du| du.apply(s.initial()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(GoalEvaluation {
                    value: state_infidelity(&psi_t, s)?,
                    gradient: state_goal_gradient(&psi_t, &dpsi, s)?,
                    overlap: s.overlap(&psi_t)?,
                })
            }
        }
    }
}
