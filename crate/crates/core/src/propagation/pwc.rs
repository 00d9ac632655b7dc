use serde::{Deserialize, Serialize};

use super::ControlledHamiltonian;
use crate::controls::{check_params, locate_piece, ControlAnsatz};
use crate::densemath::{expm, ComplexMatrix, I};
use crate::{GoatError, Result};

/// Where each slice samples the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    Start,
    Midpoint,
}

/// Product of `expm(-i H(t*) dt)` over `slices` equal slices of `[0, T]`.
pub fn pwc_propagate(
    ham: &ControlledHamiltonian,
    ansatz: &dyn ControlAnsatz,
    params: &[f64],
    duration: f64,
    slices: usize,
    sampling: Sampling,
) -> Result<ComplexMatrix> {
    ham.check_ansatz(ansatz)?;
    check_params(ansatz, params)?;
    if slices == 0 {
        return Err(GoatError::InvalidArgument("slice count must be positive".into()));
    }
    if !(duration > 0.0) || duration > ansatz.duration() * (1.0 + 1e-14) {
        return Err(GoatError::InvalidArgument(format!(
            "duration {duration} must be in (0, {}]",
            ansatz.duration()
        )));
    }
    let dt = duration / slices as f64;
    let offset = match sampling {
        Sampling::Start => 0.0,
        Sampling::Midpoint => 0.5,
    };
    let mut u = ComplexMatrix::identity(ham.dim());
    let mut next = ComplexMatrix::zeros(ham.dim());
    for n in 0..slices {
        let t = (n as f64 + offset) * dt;
        let piece = locate_piece(ansatz, t, 0)?;
        let h = ham.on_piece(ansatz, params, piece, t);
        let step = expm(&h.scale(-I * dt));
        next.fill_zero();
        next.gemm_acc(crate::densemath::ONE, &step, &u);
        std::mem::swap(&mut u, &mut next);
    }
    Ok(u)
}
