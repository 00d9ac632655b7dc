//! Dense complex linear algebra and seeded random ensembles.
//!
//! Matrices are square, row-major and small (the shipped problems stay at
//! dimension 8 or below), so everything here is plain loops over `Vec`s.

mod expm;
mod matrix;
pub mod pauli;
mod random;
mod vector;

pub use expm::expm;
pub use matrix::ComplexMatrix;
pub use random::{
    random_hermitian, random_hermitian_with, random_state, random_state_with, random_unitary,
    random_unitary_with, rng_from_seed, Rng,
};
pub use vector::ComplexVector;

pub use num_complex::Complex64;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Checked product `a * b`.
pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> crate::Result<ComplexMatrix> {
    a.matmul(b)
}

/// Conjugate transpose.
pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.dagger()
}

pub fn trace(a: &ComplexMatrix) -> Complex64 {
    a.trace()
}

pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    a.frobenius_norm()
}
