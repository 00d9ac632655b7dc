//! Single-qubit Pauli matrices and tensor-product helpers.

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::{GoatError, Result};

fn from2(a: [[(f64, f64); 2]; 2]) -> ComplexMatrix {
    let data = a
        .iter()
        .flatten()
        .map(|&(re, im)| Complex64::new(re, im))
        .collect();
    ComplexMatrix::from_vec(2, data).expect("2x2 literal")
}

pub fn identity() -> ComplexMatrix {
    ComplexMatrix::identity(2)
}

pub fn x() -> ComplexMatrix {
    from2([[(0.0, 0.0), (1.0, 0.0)], [(1.0, 0.0), (0.0, 0.0)]])
}

pub fn y() -> ComplexMatrix {
    from2([[(0.0, 0.0), (0.0, -1.0)], [(0.0, 1.0), (0.0, 0.0)]])
}

pub fn z() -> ComplexMatrix {
    from2([[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (-1.0, 0.0)]])
}

pub fn by_name(name: char) -> Option<ComplexMatrix> {
    match name {
        'I' => Some(identity()),
        'X' => Some(x()),
        'Y' => Some(y()),
        'Z' => Some(z()),
        _ => None,
    }
}

/// Tensor product of single-qubit Paulis, leftmost factor most significant:
/// `pauli_string("ZI")` is `Z ⊗ I`.
pub fn pauli_string(spec: &str) -> Result<ComplexMatrix> {
    let mut out: Option<ComplexMatrix> = None;
    for ch in spec.chars().filter(|c| !c.is_whitespace() && *c != '⊗') {
        let factor = by_name(ch.to_ascii_uppercase()).ok_or_else(|| {
            GoatError::InvalidArgument(format!("unknown Pauli factor `{ch}` in `{spec}`"))
        })?;
        out = Some(match out {
            None => factor,
            Some(acc) => acc.kron(&factor),
        });
    }
    out.ok_or_else(|| GoatError::InvalidArgument(format!("empty Pauli string `{spec}`")))
}

/// CNOT with the first (most significant) qubit as control.
pub fn cnot() -> ComplexMatrix {
    let one = Complex64::new(1.0, 0.0);
    let mut m = ComplexMatrix::zeros(4);
    m.set(0, 0, one);
    m.set(1, 1, one);
    m.set(2, 3, one);
    m.set(3, 2, one);
    m
}
