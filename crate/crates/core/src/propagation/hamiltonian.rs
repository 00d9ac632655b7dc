use crate::controls::{check_params, locate_piece, ControlAnsatz};
use crate::densemath::ComplexMatrix;
use crate::{GoatError, Result};

/// `H(alpha, t) = H_0 + sum_k c_k(alpha, t) H_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlledHamiltonian {
    drift: ComplexMatrix,
    controls: Vec<ComplexMatrix>,
}

const HERMITIAN_TOL: f64 = 1e-12;

impl ControlledHamiltonian {
    pub fn new(drift: ComplexMatrix, controls: Vec<ComplexMatrix>) -> Result<Self> {
        if drift.hermiticity_defect() > HERMITIAN_TOL {
            return Err(GoatError::InvalidArgument("drift Hamiltonian is not Hermitian".into()));
        }
        for (k, h) in controls.iter().enumerate() {
            if h.dim() != drift.dim() {
                return Err(GoatError::DimensionMismatch {
                    context: "control Hamiltonian",
                    left: h.dim(),
                    right: drift.dim(),
                });
            }
            if h.hermiticity_defect() > HERMITIAN_TOL {
                return Err(GoatError::InvalidArgument(format!(
                    "control Hamiltonian {k} is not Hermitian"
                )));
            }
        }
        Ok(Self { drift, controls })
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn drift(&self) -> &ComplexMatrix {
        &self.drift
    }

    pub fn controls(&self) -> &[ComplexMatrix] {
        &self.controls
    }

    pub(crate) fn check_ansatz(&self, ansatz: &dyn ControlAnsatz) -> Result<()> {
        if ansatz.n_controls() != self.controls.len() {
            return Err(GoatError::DimensionMismatch {
                context: "ansatz controls vs control Hamiltonians",
                left: ansatz.n_controls(),
                right: self.controls.len(),
            });
        }
        Ok(())
    }

    /// `H` on a given piece, valid on its closure.
    pub(crate) fn on_piece(
        &self,
        ansatz: &dyn ControlAnsatz,
        params: &[f64],
        piece: usize,
        t: f64,
    ) -> ComplexMatrix {
        let mut h = self
            .drift
            .scale_real(ansatz.drift_time_derivative(params, piece, t, 0));
        for (k, hk) in self.controls.iter().enumerate() {
            let c = ansatz.piece_time_derivative(params, piece, k, t, 0);
            if c != 0.0 {
                h.axpy_real(c, hk);
            }
        }
        h
    }

    /// `H(alpha, t)`; on an internal boundary the later piece is used.
    pub fn evaluate(&self, ansatz: &dyn ControlAnsatz, params: &[f64], t: f64) -> Result<ComplexMatrix> {
        self.check_ansatz(ansatz)?;
        check_params(ansatz, params)?;
        let piece = locate_piece(ansatz, t, 0)?;
        Ok(self.on_piece(ansatz, params, piece, t))
    }
}
